#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/random/uniform_01.hpp>
#include <CLI11.hpp>
#include <json.hpp>

#include "gsu/cli/report.hpp"
#include "gsu/cli/tsv.hpp"
#include "gsu/core/error.hpp"
#include "gsu/core/parallel.hpp"
#include "gsu/gsucore/gsu_test.hpp"
#include "gsu/power/power.hpp"
#include "gsu/simlab/experiment.hpp"
#include "gsu/version.hpp"

namespace gsu::cli {

enum ExitCode : int { kSuccess = 0, kInternal = 1, kInputError = 2, kNumericalError = 3 };

namespace detail {

inline GeneticKernel parse_genetic_kernel(const std::string& s) {
  if (s == "ibs") return GeneticKernel::ibs;
  if (s == "ed") return GeneticKernel::ed;
  return GeneticKernel::wibs;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : gsu::detail::split(text, ',')) {
    out.push_back(gsu::detail::parse_number<double>(what, item));
  }
  return out;
}

inline void emit(const nlohmann::json& j, const std::string& out_path, std::ostream& out) {
  const auto text = j.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    io::write_atomic(out_path, text);
  }
}

/// Kernel flags shared by `test` and the pilot mode of `power`.
struct KernelFlags {
  std::string kernel = "wibs";
  std::string pheno_sim = "ed";
  std::string missing = "impute";
  std::string pheno_weights;

  void add_to(CLI::App& sub) {
    sub.add_option("--kernel", kernel, "Genetic similarity kernel")
        ->check(CLI::IsMember({"ibs", "wibs", "ed"}))
        ->capture_default_str();
    sub.add_option("--pheno-sim", pheno_sim, "Phenotype similarity kernel")
        ->check(CLI::IsMember({"ed", "ed-corr"}))
        ->capture_default_str();
    sub.add_option("--missing", missing, "Missing genotype policy")
        ->check(CLI::IsMember({"impute", "drop"}))
        ->capture_default_str();
    sub.add_option("--pheno-weights", pheno_weights, "Comma-separated phenotype weights (default 1/L each)");
  }

  void apply(GsuOptions& opt) const {
    opt.genetic_kernel = parse_genetic_kernel(kernel);
    opt.phenotype_kernel = pheno_sim == "ed-corr" ? PhenotypeKernel::ed_corr : PhenotypeKernel::ed;
    opt.missing = missing == "drop" ? MissingPolicy::drop_subject : MissingPolicy::impute_mean;
  }
};

struct LoadedInputs {
  io::AlignedData data;
  report::InputDigest geno, pheno;
  std::size_t geno_subjects = 0, pheno_subjects = 0;
  std::vector<std::string> warnings;
};

inline LoadedInputs load_inputs(const std::string& geno_path, const std::string& pheno_path,
                                const std::string& weights) {
  const auto gtext = io::read_file(geno_path);
  const auto ptext = io::read_file(pheno_path);
  const auto g = io::parse_genotype_tsv(gtext, geno_path);
  auto p = io::parse_phenotype_tsv(ptext, pheno_path);
  if (!weights.empty()) {
    auto w = parse_list(weights, "--pheno-weights");
    if (w.size() != p.table.columns()) {
      throw InputError("--pheno-weights has " + std::to_string(w.size()) + " values for " +
                       std::to_string(p.table.columns()) + " phenotype columns");
    }
    p.table = PhenotypeTable(p.table.values(), p.table.kinds(), std::move(w), p.table.names(), p.table.subject_ids());
  }
  LoadedInputs in{io::align_subjects(g, p), {geno_path, io::digest_hex(gtext)}, {pheno_path, io::digest_hex(ptext)},
                  g.subjects(), p.table.subjects(), {}};
  const auto dropped = in.data.dropped_genotype_only + in.data.dropped_phenotype_only;
  if (dropped > 0) {
    in.warnings.push_back("subject alignment dropped " + std::to_string(dropped) + " subject(s) (" +
                          std::to_string(in.data.dropped_genotype_only) + " only in genotypes, " +
                          std::to_string(in.data.dropped_phenotype_only) + " only in phenotypes)");
  }
  return in;
}

inline void log_warnings(const std::vector<std::string>& w, std::ostream& err) {
  for (const auto& s : w) err << "gsu: warning: " << s << "\n";
}

// ---------------------------------------------------------------------------

struct TestFlags {
  std::string geno, pheno, out;
  KernelFlags kernel;
  bool covariates = false;
  std::string covariate_mode = "projection";
  std::string null_calibration = "exact-moments";
  std::size_t permutations = 0;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = default_thread_count();
  bool all_engines = false;
};

inline int cmd_test(const TestFlags& f, std::ostream& out, std::ostream& err) {
  auto in = load_inputs(f.geno, f.pheno, f.kernel.pheno_weights);
  if (!(f.alpha > 0.0 && f.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
  GsuOptions opt;
  f.kernel.apply(opt);
  opt.permutations = f.permutations;
  opt.seed = f.seed;
  opt.threads = f.threads;
  opt.evaluate_all_engines = f.all_engines;
  opt.null_calibration =
      f.null_calibration == "asymptotic" ? NullCalibration::asymptotic : NullCalibration::exact_moments;
  const auto& pf = in.data.phenotypes;
  std::vector<std::string> cov_names;
  if (f.covariates) {
    if (pf.covariate_names.empty()) throw InputError("--covariates given but the phenotype file has no cov_ columns");
    opt.covariates = CovariateMatrix::with_intercept(pf.covariates);
    opt.covariate_mode = f.covariate_mode == "residualize" ? CovariateMode::residualize : CovariateMode::projection;
    cov_names = pf.covariate_names;
    in.warnings.push_back(std::string("covariate adjustment: ") + to_string(opt.covariate_mode) + " with " +
                          std::to_string(cov_names.size()) + " covariate(s) plus intercept");
  } else if (!pf.covariate_names.empty()) {
    in.warnings.push_back("phenotype file has cov_ columns; they are ignored without --covariates");
  }

  const auto result = gsu_test(in.data.genotypes, pf.table, opt);

  report::TestContext ctx;
  ctx.genotype = in.geno;
  ctx.phenotype = in.pheno;
  ctx.subjects_in_genotype_file = in.geno_subjects;
  ctx.subjects_in_phenotype_file = in.pheno_subjects;
  ctx.dropped_alignment = in.data.dropped_genotype_only + in.data.dropped_phenotype_only;
  ctx.variants = in.data.genotypes.variants();
  ctx.phenotype_names = pf.table.names();
  for (auto k : pf.table.kinds()) ctx.phenotype_kinds.emplace_back(to_string(k));
  ctx.phenotype_weights = pf.table.weights();
  ctx.covariates = cov_names;
  ctx.alpha = f.alpha;
  const auto j = report::test_report(ctx, opt, result, in.warnings);
  log_warnings(j["warnings"].get<std::vector<std::string>>(), err);
  emit(j, f.out, out);
  if (!f.out.empty()) {
    char line[256];
    std::snprintf(line, sizeof line, "n=%zu U=%.6g nU=%.6g p=%.6g (%s)", result.statistic.n, result.statistic.u,
                  result.statistic.scaled, result.p_asymptotic.value_or(1.0), to_string(result.p_engine));
    out << line;
    if (result.p_permutation) out << " p_perm=" << *result.p_permutation;
    out << "\n";
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct PowerFlags {
  std::optional<double> mu, zeta1, zeta0;
  std::string weights = "1";
  std::string pilot_geno, pilot_pheno, out;
  KernelFlags kernel;
  double alpha = 0.05;
  std::optional<std::size_t> n;
  std::optional<double> beta;
};

inline int cmd_power(const PowerFlags& f, bool sample_size, std::ostream& out, std::ostream& err) {
  const bool pilot = !f.pilot_geno.empty() || !f.pilot_pheno.empty();
  const bool direct = f.mu || f.zeta1;
  if (pilot && direct) throw InputError("give either --mu/--zeta1 or --pilot-geno/--pilot-pheno, not both");
  if (!pilot && !direct) throw InputError("give --mu and --zeta1, or --pilot-geno and --pilot-pheno");
  if (sample_size && !f.beta) throw InputError("samplesize needs --beta");
  if (!sample_size && (f.n.has_value() == f.beta.has_value())) {
    throw InputError("give exactly one of --n (power) or --beta (sample size)");
  }

  report::PowerContext ctx;
  AlternativeMoments m;
  std::optional<ChiSquareMixture> mixture;
  std::vector<std::string> warnings;
  if (pilot) {
    if (f.pilot_geno.empty() || f.pilot_pheno.empty()) throw InputError("pilot mode needs both --pilot-geno and --pilot-pheno");
    auto in = load_inputs(f.pilot_geno, f.pilot_pheno, f.kernel.pheno_weights);
    GsuOptions opt;
    f.kernel.apply(opt);
    const auto est = estimate_moments(in.data.genotypes, in.data.phenotypes.table, opt);
    m = est.moments;
    mixture = est.null.mixture;
    ctx.moments_source = "pilot";
    ctx.pilot_genotype = in.geno;
    ctx.pilot_phenotype = in.pheno;
    ctx.pilot_n = est.n;
    warnings = in.warnings;
    warnings.insert(warnings.end(), est.warnings.begin(), est.warnings.end());
  } else {
    if (!f.mu || !f.zeta1) throw InputError("direct mode needs both --mu and --zeta1");
    m.mu = *f.mu;
    m.zeta1 = *f.zeta1;
    if (f.zeta0) m.zeta0 = *f.zeta0;
    mixture = ChiSquareMixture(parse_list(f.weights, "--weights"), true);
    ctx.moments_source = "given";
  }
  ctx.mixture_size = mixture->size();

  nlohmann::json j;
  if (f.beta) {
    const auto r = required_sample_size(m, *mixture, f.alpha, *f.beta);
    j = report::samplesize_report(ctx, m, r, warnings);
    if (!f.out.empty()) {
      out << "n=" << r.n << " achieved_power=" << r.achieved_power << " q_crit=" << r.q_crit << "\n";
    }
  } else {
    const auto r = compute_power(m, *mixture, f.alpha, *f.n);
    j = report::power_report(ctx, m, r, warnings);
    if (!f.out.empty()) out << "power=" << r.power << " q_crit=" << r.q_crit << "\n";
  }
  log_warnings(j["warnings"].get<std::vector<std::string>>(), err);
  emit(j, f.out, out);
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct SimulateFlags {
  std::string config;
  std::string out_dir = ".";
  std::optional<unsigned> threads;
};

inline std::string pvalue_table(const ExperimentSummary& s) {
  std::string t = "replicate\tp_value\tengine\n";
  for (std::size_t r = 0; r < s.pvalues.size(); ++r) {
    const bool ok = !std::isnan(s.pvalues[r]);
    t += std::to_string(r) + "\t" + io::format_double(s.pvalues[r]) + "\t" + (ok ? to_string(s.engines[r]) : "failed") +
         "\n";
  }
  return t;
}

inline int cmd_simulate(const SimulateFlags& f, std::ostream& out, std::ostream& err) {
  const auto text = io::read_file(f.config);
  auto cfg = parse_sim_config(text, f.config);
  if (f.threads) cfg.threads = *f.threads;
  else if (cfg.threads <= 1) cfg.threads = default_thread_count();
  namespace fs = std::filesystem;
  if (!fs::is_directory(f.out_dir)) throw InputError("output directory '" + f.out_dir + "' does not exist");

  const auto s = run_experiment(cfg);
  const auto j = report::simulate_report({f.config, io::digest_hex(text)}, cfg, cfg.threads, s);
  io::write_atomic((fs::path(f.out_dir) / "summary.json").string(), j.dump(2) + "\n");
  io::write_atomic((fs::path(f.out_dir) / "pvalues.tsv").string(), pvalue_table(s));
  log_warnings(s.failure_messages, err);

  char line[512];
  out << "experiment          n     M   L  reps  fail  rejections  rate     mc_se    time_s\n";
  std::snprintf(line, sizeof line, "%-18s %5zu %5zu %3zu %5zu %5zu %11zu  %.4f  %.4f  %7.1f\n", cfg.name.c_str(),
                cfg.n, cfg.variants, cfg.phenotypes.size(), s.replicates, s.failures, s.rejections,
                s.rejection_rate, s.mc_stderr, s.wall_time_seconds);
  out << line;
  return kSuccess;
}

// ---------------------------------------------------------------------------

struct GenerateFlags {
  std::string config;
  std::optional<std::size_t> n, variants;
  std::optional<std::string> phenotypes;
  std::optional<std::uint64_t> seed;
  std::size_t replicate = 0;
  double missing_rate = 0.0;
  std::string geno, pheno;
};

inline int cmd_generate(const GenerateFlags& f, std::ostream& out, std::ostream&) {
  SimConfig cfg = f.config.empty() ? SimConfig{} : load_sim_config(f.config);
  if (f.n) cfg.n = *f.n;
  if (f.variants) cfg.variants = *f.variants;
  if (f.seed) cfg.seed = *f.seed;
  if (f.phenotypes) {
    const auto kinds = gsu::detail::parse_phenotype_list(*f.phenotypes);
    cfg.phenotypes.assign(kinds.size(), PhenotypeSpec{});
    for (std::size_t l = 0; l < kinds.size(); ++l) cfg.phenotypes[l].model.kind = kinds[l];
  }
  cfg.validate();
  if (!(f.missing_rate >= 0.0 && f.missing_rate < 1.0)) throw InputError("--missing-rate must lie in [0, 1)");
  auto [g, y] = simulate_replicate(cfg, f.replicate);
  if (f.missing_rate > 0.0) {
    auto eng = make_engine(cfg.seed, kDesignStream + 1 + f.replicate);
    boost::random::uniform_01<double> u;
    auto codes = g.codes();
    for (auto& c : codes) {
      if (u(eng) < f.missing_rate) c = GenotypeMatrix::kMissing;
    }
    g = GenotypeMatrix(g.subjects(), g.variants(), std::move(codes), g.subject_ids(), g.variant_ids());
  }
  std::vector<std::string> names;
  for (std::size_t l = 0; l < cfg.phenotypes.size(); ++l) {
    names.push_back(std::string(to_string(cfg.phenotypes[l].model.kind)) + std::to_string(l + 1));
  }
  const PhenotypeTable named(y.values(), y.kinds(), y.weights(), names, y.subject_ids());
  io::write_genotype_tsv(g, f.geno);
  io::write_phenotype_tsv(named, f.pheno);
  out << "wrote " << g.subjects() << " subjects x " << g.variants() << " variants to " << f.geno << " and "
      << cfg.phenotypes.size() << " phenotype(s) to " << f.pheno << "\n";
  return kSuccess;
}

}  // namespace detail

/// Entry point of the `gsu` tool. Exit codes: 0 success, 2 input error,
/// 3 numerical failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Generalized Similarity U test for joint genotype-phenotype association", "gsu"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  detail::TestFlags tf;
  auto* test = app.add_subcommand("test", "Test one SNV set against one or more phenotypes");
  test->add_option("--geno", tf.geno, "Genotype TSV (id column, then 0/1/2/NA per variant)")->required();
  test->add_option("--pheno", tf.pheno, "Phenotype TSV (name:binary / name:continuous columns, cov_* covariates)")
      ->required();
  tf.kernel.add_to(*test);
  test->add_flag("--covariates", tf.covariates, "Adjust for the cov_* columns of the phenotype file");
  test->add_option("--covariate-mode", tf.covariate_mode, "Covariate adjustment")
      ->check(CLI::IsMember({"projection", "residualize"}))
      ->capture_default_str();
  test->add_option("--null-calibration", tf.null_calibration, "Null law used for the asymptotic p-value")
      ->check(CLI::IsMember({"exact-moments", "asymptotic"}))
      ->capture_default_str();
  test->add_option("--permutations", tf.permutations, "Permutation count (0 = none, otherwise >= 100)")
      ->capture_default_str();
  test->add_option("--alpha", tf.alpha, "Significance level for the reject flag")->capture_default_str();
  test->add_option("--seed", tf.seed, "Permutation seed")->capture_default_str();
  test->add_option("--threads", tf.threads, "Worker threads for permutations (default GSU_THREADS or 1)");
  test->add_flag("--all-engines", tf.all_engines, "Also report the Liu p-value when Davies succeeds");
  test->add_option("--out", tf.out, "Report path (default stdout)");

  detail::PowerFlags pf;
  auto add_power_options = [&pf](CLI::App* sub, bool with_n) {
    sub->add_option("--mu", pf.mu, "Association strength mu > 0");
    sub->add_option("--zeta1", pf.zeta1, "Conditional variance zeta1 > 0");
    sub->add_option("--zeta0", pf.zeta0, "Unconditional variance (reported only)");
    sub->add_option("--weights", pf.weights, "Comma-separated null mixture weights (direct mode)")
        ->capture_default_str();
    sub->add_option("--pilot-geno", pf.pilot_geno, "Pilot genotype TSV for moment estimation");
    sub->add_option("--pilot-pheno", pf.pilot_pheno, "Pilot phenotype TSV for moment estimation");
    pf.kernel.add_to(*sub);
    sub->add_option("--alpha", pf.alpha, "Significance level")->capture_default_str();
    if (with_n) sub->add_option("--n", pf.n, "Sample size at which to evaluate power");
    sub->add_option("--beta", pf.beta, "Target power for the sample-size calculation");
    sub->add_option("--out", pf.out, "Report path (default stdout)");
  };
  auto* power = app.add_subcommand("power", "Power at --n, or the sample size reaching power --beta");
  add_power_options(power, true);
  auto* samplesize = app.add_subcommand("samplesize", "Minimal sample size reaching power --beta");
  add_power_options(samplesize, false);

  detail::SimulateFlags sf;
  auto* simulate = app.add_subcommand("simulate", "Run a replicate experiment from a key = value config");
  simulate->add_option("--config", sf.config, "Experiment config file")->required();
  simulate->add_option("--out", sf.out_dir, "Directory for summary.json and pvalues.tsv")->capture_default_str();
  simulate->add_option("--threads", sf.threads, "Worker threads (default GSU_THREADS or 1)");

  detail::GenerateFlags gf;
  auto* generate = app.add_subcommand("generate", "Write one synthetic genotype/phenotype dataset");
  generate->add_option("--config", gf.config, "Experiment config providing the models");
  generate->add_option("--n", gf.n, "Subjects");
  generate->add_option("--variants", gf.variants, "Variants");
  generate->add_option("--phenotypes", gf.phenotypes, "Phenotype models, e.g. BGC or gaussian,cauchy");
  generate->add_option("--seed", gf.seed, "Seed");
  generate->add_option("--replicate", gf.replicate, "Replicate index within the seed")->capture_default_str();
  generate->add_option("--missing-rate", gf.missing_rate, "Fraction of genotype cells set to NA")
      ->capture_default_str();
  generate->add_option("--geno", gf.geno, "Genotype TSV to write")->required();
  generate->add_option("--pheno", gf.pheno, "Phenotype TSV to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (*test) return detail::cmd_test(tf, out, err);
    if (*power) return detail::cmd_power(pf, false, out, err);
    if (*samplesize) return detail::cmd_power(pf, true, out, err);
    if (*simulate) return detail::cmd_simulate(sf, out, err);
    if (*generate) return detail::cmd_generate(gf, out, err);
  } catch (const InputError& e) {
    err << "gsu: error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "gsu: numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    err << "gsu: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInputError;
}

}  // namespace gsu::cli
