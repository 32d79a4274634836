#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gsu/cli/app.hpp"
#include "schema_check.hpp"

namespace gsu {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run gsu_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gsu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("gsu_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void generate(const std::string& tag, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"generate", "--geno", path(tag + ".geno.tsv"), "--pheno", path(tag + ".pheno.tsv")};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = gsu_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
  }

  static json load_json(const std::string& p) {
    std::ifstream in(p);
    return json::parse(in);
  }

  static void expect_schema_valid(const json& doc) {
    static const schema_check::Validator v(load_json(std::string(GSU_SOURCE_DIR) + "/docs/run_report.schema.json"));
    const auto errors = v.validate(doc);
    for (const auto& e : errors) ADD_FAILURE() << e;
  }

  fs::path dir_;
};

TEST_F(CliTest, TestReportEndToEnd) {
  generate("a", {"--n", "200", "--seed", "4"});
  const auto r = gsu_cli({"test", "--geno", path("a.geno.tsv"), "--pheno", path("a.pheno.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  expect_schema_valid(j);
  const double p = j["pvalues"]["asymptotic"];
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_EQ(j["pvalues"]["engine"], "davies");
  EXPECT_EQ(j["data"]["subjects"], 200);
  EXPECT_EQ(j["statistic"]["n"], 200);
  EXPECT_TRUE(j["pvalues"]["permutation"].is_null());
}

TEST_F(CliTest, PermutationFlagAddsSecondPvalue) {
  generate("a", {"--n", "80"});
  const auto r = gsu_cli({"test", "--geno", path("a.geno.tsv"), "--pheno", path("a.pheno.tsv"), "--permutations",
                          "2000", "--out", path("report.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("p="), std::string::npos);
  const auto j = load_json(path("report.json"));
  expect_schema_valid(j);
  EXPECT_TRUE(j["pvalues"]["asymptotic"].is_number());
  EXPECT_TRUE(j["pvalues"]["permutation"].is_number());
  EXPECT_EQ(j["pvalues"]["permutations_used"], 2000);
}

TEST_F(CliTest, InvalidGenotypeCellCitesLineAndColumn) {
  std::ofstream(path("bad.geno.tsv")) << "id\tv1\tv2\ns1\t0\t1\ns2\t3\t1\ns3\t1\t2\n";
  std::ofstream(path("p.tsv")) << "id\ty:continuous\ns1\t0.1\ns2\t0.5\ns3\t-1\n";
  const auto r = gsu_cli({"test", "--geno", path("bad.geno.tsv"), "--pheno", path("p.tsv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("column 2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("'3'"), std::string::npos) << r.err;
}

TEST_F(CliTest, BinaryExitCodes) {
  std::ofstream(path("bad.geno.tsv")) << "id\tv1\ns1\t0\ns2\t3\n";
  std::ofstream(path("p.tsv")) << "id\ty:continuous\ns1\t0.1\ns2\t0.5\n";
  const std::string cli = GSU_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status(cli + " test --geno " + path("bad.geno.tsv") + " --pheno " + path("p.tsv")), 2);
  EXPECT_EQ(status(cli + " power --mu 0.1 --zeta1 0.04 --n 100"), 0);
  EXPECT_EQ(status(cli + " power --mu -1 --zeta1 0.04 --n 100"), 2);
  EXPECT_EQ(status(cli), 2);
  EXPECT_EQ(status(cli + " --version"), 0);
}

TEST_F(CliTest, NoSharedSubjects) {
  std::ofstream(path("g.tsv")) << "id\tv1\na\t0\nb\t1\n";
  std::ofstream(path("p.tsv")) << "id\ty:continuous\nc\t0.1\nd\t0.5\n";
  const auto r = gsu_cli({"test", "--geno", path("g.tsv"), "--pheno", path("p.tsv")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("share no subject"), std::string::npos);
}

TEST_F(CliTest, PowerHandExample) {
  const auto r = gsu_cli({"power", "--mu", "0.1", "--zeta1", "0.04", "--alpha", "0.05", "--n", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  expect_schema_valid(j);
  EXPECT_NEAR(j["power"]["power"].get<double>(), 0.9632, 1e-4);
}

TEST_F(CliTest, SampleSizeHalfPowerReduction) {
  const auto r = gsu_cli({"samplesize", "--mu", "0.1", "--zeta1", "0.04", "--beta", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  expect_schema_valid(j);
  const double q = j["sample_size"]["q_crit"];
  EXPECT_EQ(j["sample_size"]["n"].get<std::size_t>(), static_cast<std::size_t>(std::ceil(q / 0.1)));
  const auto same = gsu_cli({"power", "--mu", "0.1", "--zeta1", "0.04", "--beta", "0.5"});
  ASSERT_EQ(same.code, 0);
  EXPECT_EQ(json::parse(same.out)["sample_size"]["n"], j["sample_size"]["n"]);
}

TEST_F(CliTest, PowerArgumentErrors) {
  EXPECT_EQ(gsu_cli({"power", "--mu", "0", "--zeta1", "0.04", "--n", "100"}).code, 2);
  EXPECT_EQ(gsu_cli({"power", "--mu", "0.1", "--n", "100"}).code, 2);
  EXPECT_EQ(gsu_cli({"power", "--mu", "0.1", "--zeta1", "0.04"}).code, 2);
  EXPECT_EQ(gsu_cli({"samplesize", "--mu", "0.1", "--zeta1", "0.04"}).code, 2);
  EXPECT_EQ(gsu_cli({"power", "--mu", "0.1", "--zeta1", "0.04", "--n", "100", "--weights", "1,x"}).code, 2);
}

TEST_F(CliTest, NullPilotHasNoDetectableAssociation) {
  // roughly half of null pilots estimate mu <= 0; the first such seed must be refused
  bool refused = false;
  for (int seed = 1; seed <= 20 && !refused; ++seed) {
    const auto tag = "s" + std::to_string(seed);
    generate(tag, {"--n", "60", "--seed", std::to_string(seed)});
    const auto r = gsu_cli({"power", "--pilot-geno", path(tag + ".geno.tsv"), "--pilot-pheno",
                            path(tag + ".pheno.tsv"), "--n", "500"});
    if (r.code == 2) {
      EXPECT_NE(r.err.find("no detectable association"), std::string::npos) << r.err;
      refused = true;
    } else {
      ASSERT_EQ(r.code, 0) << r.err;
      expect_schema_valid(json::parse(r.out));
    }
  }
  EXPECT_TRUE(refused);
}

TEST_F(CliTest, SimulateWritesDeterministicTables) {
  std::ofstream(path("exp.cfg")) << "name = tiny\nn = 40\nvariants = 10\nreplicates = 40\nseed = 3\n";
  fs::create_directories(path("one"));
  fs::create_directories(path("eight"));
  auto a = gsu_cli({"simulate", "--config", path("exp.cfg"), "--out", path("one"), "--threads", "1"});
  auto b = gsu_cli({"simulate", "--config", path("exp.cfg"), "--out", path("eight"), "--threads", "8"});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(io::read_file(path("one/pvalues.tsv")), io::read_file(path("eight/pvalues.tsv")));
  const auto j = load_json(path("one/summary.json"));
  expect_schema_valid(j);
  EXPECT_EQ(j["experiment"]["replicates"], 40);
  EXPECT_EQ(j["settings"]["threads"], 1);
  EXPECT_NE(a.out.find("tiny"), std::string::npos);
}

TEST_F(CliTest, SimulateConfigErrors) {
  std::ofstream(path("bad.cfg")) << "n = 40\nsize = 3\n";
  const auto r = gsu_cli({"simulate", "--config", path("bad.cfg"), "--out", path("")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("valid keys"), std::string::npos);
  EXPECT_EQ(gsu_cli({"simulate", "--config", path("missing.cfg")}).code, 2);
}

TEST_F(CliTest, MissingGenotypesAndCovariates) {
  generate("m", {"--n", "60", "--missing-rate", "0.05"});
  // add a covariate column to the generated phenotype file
  std::ifstream in(path("m.pheno.tsv"));
  std::ofstream cov(path("m.cov.tsv"));
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    cov << line << '\t' << (row == 0 ? std::string("cov_age") : std::to_string(20 + (row * 7) % 31)) << '\n';
    ++row;
  }
  cov.close();
  for (const std::string policy : {"impute", "drop"}) {
    const auto r = gsu_cli({"test", "--geno", path("m.geno.tsv"), "--pheno", path("m.cov.tsv"), "--missing", policy,
                            "--covariates"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = json::parse(r.out);
    expect_schema_valid(j);
    EXPECT_EQ(j["settings"]["covariates"], json::array({"cov_age"}));
    if (policy == "impute") EXPECT_GT(j["data"]["imputed_cells"].get<int>(), 0);
    else EXPECT_GT(j["data"]["subjects_dropped_missing"].get<int>(), 0);
  }
}

TEST(Tsv, GenotypeRoundTrip) {
  const GenotypeMatrix g(3, 2, {0, 1, -1, 2, 1, 0}, {"a", "b", "c"}, {"rs1", "rs2"});
  EXPECT_EQ(io::parse_genotype_tsv(io::format_genotype_tsv(g)), g);
}

TEST(Tsv, PhenotypeRoundTrip) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 0.125, 0, -3.5e-7, 1, 12345.678;
  const PhenotypeTable t(v, {PhenotypeKind::binary, PhenotypeKind::continuous}, {}, {"case", "bmi"}, {"a", "b", "c"});
  const auto back = io::parse_phenotype_tsv(io::format_phenotype_tsv(t));
  EXPECT_EQ(back.table.values(), v);
  EXPECT_EQ(back.table.names(), t.names());
  EXPECT_EQ(back.table.kinds(), t.kinds());
}

TEST(Tsv, MalformedInputs) {
  EXPECT_THROW(io::parse_genotype_tsv("id\tv1\na\t0\na\t1\n"), InputError);            // duplicate id
  EXPECT_THROW(io::parse_genotype_tsv("id\tv1\na\t0\nb\n"), InputError);               // ragged row
  EXPECT_THROW(io::parse_phenotype_tsv("id\ty\na\t0\nb\t1\n"), InputError);            // no kind suffix
  EXPECT_THROW(io::parse_phenotype_tsv("id\ty:binary\na\t0\nb\t2\n"), InputError);     // not 0/1
  EXPECT_THROW(io::parse_phenotype_tsv("id\ty:continuous\na\tNA\nb\t2\n"), InputError);
  EXPECT_THROW(io::parse_phenotype_tsv("id\ty:continuous\na\tabc\nb\t2\n"), InputError);
}

TEST(Tsv, AlignKeepsGenotypeOrder) {
  const GenotypeMatrix g(3, 1, {0, 1, 2}, {"a", "b", "c"});
  const auto p = io::parse_phenotype_tsv("id\ty:continuous\nc\t3\nx\t9\na\t1\n");
  const auto al = io::align_subjects(g, p);
  EXPECT_EQ(al.genotypes.subject_ids(), (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(al.phenotypes.table.subject_ids(), (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(al.phenotypes.table.values()(1, 0), 3.0);
  EXPECT_EQ(al.dropped_genotype_only, 1u);
  EXPECT_EQ(al.dropped_phenotype_only, 1u);
}

}  // namespace
}  // namespace gsu
