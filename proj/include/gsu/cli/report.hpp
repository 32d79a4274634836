#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gsu/gsucore/gsu_test.hpp"
#include "gsu/power/power.hpp"
#include "gsu/simlab/experiment.hpp"
#include "gsu/version.hpp"

namespace gsu::report {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
json optional_or_null(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

inline json envelope(const std::string& command) {
  return json{{"schema_version", kSchemaVersion}, {"tool", "gsu"}, {"version", kVersion}, {"command", command}};
}

struct InputDigest {
  std::string path;
  std::string digest;
};

inline json input_json(const InputDigest& d) { return json{{"path", d.path}, {"digest", d.digest}}; }

inline json test_settings(const GsuOptions& opt, double alpha, const std::vector<std::string>& covariates) {
  return json{{"genetic_kernel", to_string(opt.genetic_kernel)},
              {"phenotype_kernel", to_string(opt.phenotype_kernel)},
              {"covariates", covariates},
              {"covariate_mode", covariates.empty() ? json(nullptr) : json(to_string(opt.covariate_mode))},
              {"missing_policy", opt.missing == MissingPolicy::impute_mean ? "impute-mean" : "drop-subject"},
              {"null_calibration", to_string(opt.null_calibration)},
              {"permutations", opt.permutations},
              {"alpha", alpha},
              {"seed", opt.seed},
              {"spectrum_tol", opt.spectrum_tol},
              {"mixture_cap", opt.mixture_cap}};
}

struct TestContext {
  InputDigest genotype;
  InputDigest phenotype;
  std::size_t subjects_in_genotype_file = 0;
  std::size_t subjects_in_phenotype_file = 0;
  std::size_t dropped_alignment = 0;
  std::size_t variants = 0;
  std::vector<std::string> phenotype_names;
  std::vector<std::string> phenotype_kinds;
  std::vector<double> phenotype_weights;
  std::vector<std::string> covariates;
  double alpha = 0.05;
};

inline json test_report(const TestContext& ctx, const GsuOptions& opt, const TestResult& r,
                        std::vector<std::string> warnings) {
  json j = envelope("test");
  j["inputs"] = json{{"genotype", input_json(ctx.genotype)}, {"phenotype", input_json(ctx.phenotype)}};
  j["settings"] = test_settings(opt, ctx.alpha, ctx.covariates);

  json phenos = json::array();
  for (std::size_t c = 0; c < ctx.phenotype_names.size(); ++c) {
    phenos.push_back(json{{"name", ctx.phenotype_names[c]},
                          {"kind", ctx.phenotype_kinds[c]},
                          {"weight", ctx.phenotype_weights[c]}});
  }
  j["data"] = json{{"subjects", r.statistic.n},
                   {"subjects_genotype_file", ctx.subjects_in_genotype_file},
                   {"subjects_phenotype_file", ctx.subjects_in_phenotype_file},
                   {"subjects_dropped_alignment", ctx.dropped_alignment},
                   {"subjects_dropped_missing", r.subjects_dropped},
                   {"variants", ctx.variants},
                   {"variants_used", r.variants_used},
                   {"monomorphic_dropped", r.monomorphic_dropped},
                   {"imputed_cells", r.imputed_cells},
                   {"phenotypes", phenos}};
  j["statistic"] = json{{"U", r.statistic.u}, {"nU", r.statistic.scaled}, {"n", r.statistic.n}};

  const auto& d = r.diagnostics;
  json pv{{"asymptotic", optional_or_null(r.p_asymptotic)},
          {"engine", to_string(r.p_engine)},
          {"davies", d.davies ? json(d.davies->p) : json(nullptr)},
          {"liu", optional_or_null(d.liu)},
          {"permutation", optional_or_null(r.p_permutation)},
          {"permutations_used", r.permutations_used}};
  j["pvalues"] = pv;
  const double p_main = r.p_asymptotic ? *r.p_asymptotic : r.p_permutation.value_or(1.0);
  j["reject"] = p_main < ctx.alpha;

  const auto side = [](const SideSpectrum& s) {
    return json{{"retained", s.retained.size()}, {"truncated", s.truncated}, {"dropped_mass", s.dropped_mass}};
  };
  j["diagnostics"] = json{
      {"spectrum", json{{"truncation_tol", d.spectrum.truncation_tol},
                        {"genetic", side(d.spectrum.genetic)},
                        {"phenotypic", side(d.spectrum.phenotypic)}}},
      {"mixture", json{{"size", d.mixture_size},
                       {"grid_size", d.mixture_grid},
                       {"dropped", d.mixture_dropped},
                       {"dropped_mass", d.mixture_dropped_mass},
                       {"variance", d.mixture_variance}}},
      {"null_moments", json{{"mean", d.null_mean}, {"variance", d.null_variance}, {"evaluated_at", d.evaluated_at}}},
      {"davies", d.davies ? json{{"status", to_string(d.davies->status)},
                                 {"error_bound", number_or_null(d.davies->error_bound)},
                                 {"terms", d.davies->terms}}
                          : json(nullptr)},
      {"clamped", d.clamped}};
  warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
  j["warnings"] = warnings;
  return j;
}

struct PowerContext {
  std::string moments_source;  // "given" or "pilot"
  std::optional<InputDigest> pilot_genotype;
  std::optional<InputDigest> pilot_phenotype;
  std::optional<std::size_t> pilot_n;
  std::size_t mixture_size = 0;
};

inline json moments_json(const AlternativeMoments& m) {
  return json{{"mu", m.mu}, {"zeta1", m.zeta1}, {"zeta0", number_or_null(m.zeta0)}};
}

inline json power_inputs(const PowerContext& ctx) {
  json in{{"moments_source", ctx.moments_source}, {"mixture_size", ctx.mixture_size}};
  in["pilot_genotype"] = ctx.pilot_genotype ? input_json(*ctx.pilot_genotype) : json(nullptr);
  in["pilot_phenotype"] = ctx.pilot_phenotype ? input_json(*ctx.pilot_phenotype) : json(nullptr);
  in["pilot_n"] = ctx.pilot_n ? json(*ctx.pilot_n) : json(nullptr);
  return in;
}

inline json power_report(const PowerContext& ctx, const AlternativeMoments& m, const PowerResult& r,
                         std::vector<std::string> warnings) {
  json j = envelope("power");
  j["inputs"] = power_inputs(ctx);
  j["moments"] = moments_json(m);
  j["power"] = json{{"alpha", r.alpha}, {"q_crit", r.q_crit}, {"n", r.n}, {"power", r.power}};
  warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
  j["warnings"] = warnings;
  return j;
}

inline json samplesize_report(const PowerContext& ctx, const AlternativeMoments& m, const SampleSizeResult& r,
                              std::vector<std::string> warnings) {
  json j = envelope("samplesize");
  j["inputs"] = power_inputs(ctx);
  j["moments"] = moments_json(m);
  j["sample_size"] = json{{"alpha", r.alpha},
                          {"q_crit", r.q_crit},
                          {"target_power", r.target_power},
                          {"closed_form", r.closed_form},
                          {"n", r.n},
                          {"achieved_power", r.achieved_power}};
  warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
  j["warnings"] = warnings;
  return j;
}

inline json config_json(const SimConfig& cfg) {
  json phenos = json::array();
  for (const auto& p : cfg.phenotypes) {
    phenos.push_back(json{{"model", to_string(p.model.kind)},
                          {"intercept", p.model.intercept},
                          {"sigma2", p.model.sigma2},
                          {"cauchy_scale", p.model.scale},
                          {"mu_beta", p.effects.mu_beta},
                          {"sigma2_beta", p.effects.sigma2_beta},
                          {"causal_fraction", p.effects.causal_fraction}});
  }
  const auto& m = cfg.maf;
  return json{{"name", cfg.name},
              {"n", cfg.n},
              {"variants", cfg.variants},
              {"replicates", cfg.replicates},
              {"alpha", cfg.alpha},
              {"seed", cfg.seed},
              {"fixed_design", cfg.fixed_design},
              {"kernel", to_string(cfg.genetic_kernel)},
              {"pheno_sim", to_string(cfg.phenotype_kernel)},
              {"null_calibration", to_string(cfg.null_calibration)},
              {"maf", json{{"kind", to_string(m.kind)},
                           {"value", m.value},
                           {"min", m.lo},
                           {"max", m.hi},
                           {"beta_a", m.shape_a},
                           {"beta_b", m.shape_b},
                           {"common_fraction", m.common_fraction},
                           {"common_min", m.common_lo},
                           {"common_max", m.common_hi}}},
              {"phenotypes", phenos}};
}

inline json simulate_report(const InputDigest& config, const SimConfig& cfg, unsigned threads,
                            const ExperimentSummary& s) {
  json j = envelope("simulate");
  j["inputs"] = json{{"config", input_json(config)}};
  j["settings"] = config_json(cfg);
  j["settings"]["threads"] = threads;
  json counts = json::object();
  for (std::size_t r = 0; r < s.engines.size(); ++r) {
    if (std::isnan(s.pvalues[r])) continue;
    const auto* e = to_string(s.engines[r]);
    counts[e] = counts.value(e, 0) + 1;
  }
  j["experiment"] = json{{"replicates", s.replicates},
                         {"completed", s.completed},
                         {"failures", s.failures},
                         {"rejections", s.rejections},
                         {"rejection_rate", s.rejection_rate},
                         {"mc_stderr", s.mc_stderr},
                         {"engines", counts},
                         {"wall_time_seconds", s.wall_time_seconds}};
  j["warnings"] = s.failure_messages;
  return j;
}

}  // namespace gsu::report
