#include "gsu/cli/app.hpp"

int main(int argc, char** argv) { return gsu::cli::run_cli(argc, argv); }
