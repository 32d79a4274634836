#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/core/parallel.hpp"
#include "gsu/core/rng.hpp"
#include "gsu/gsucore/gsu_test.hpp"
#include "gsu/simkernel/phenotype.hpp"
#include "gsu/simlab/simulate.hpp"

namespace gsu {

struct PhenotypeSpec {
  PhenotypeModel model;
  EffectSpec effects;
};

struct SimConfig {
  std::string name = "experiment";
  std::size_t n = 200;
  std::size_t variants = 30;
  MafSpectrum maf;
  std::vector<PhenotypeSpec> phenotypes{PhenotypeSpec{}};
  std::size_t replicates = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // draw MAFs and effects once and reuse them in every replicate
  bool fixed_design = false;
  GeneticKernel genetic_kernel = GeneticKernel::wibs;
  PhenotypeKernel phenotype_kernel = PhenotypeKernel::ed;
  NullCalibration null_calibration = NullCalibration::exact_moments;

  void validate() const {
    if (n < 2) throw InputError("config: n must be at least 2");
    if (variants < 1) throw InputError("config: variants must be at least 1");
    if (replicates < 1) throw InputError("config: replicates must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0, 1)");
    if (phenotypes.empty()) throw InputError("config: at least one phenotype is required");
    maf.validate();
    for (const auto& p : phenotypes) {
      p.model.validate();
      p.effects.validate();
    }
  }
};

struct ExperimentSummary {
  std::string name;
  std::size_t replicates = 0;
  std::size_t completed = 0;
  std::size_t failures = 0;
  std::size_t rejections = 0;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
  double alpha = 0.0;
  std::vector<double> pvalues;       // NaN where the replicate failed
  std::vector<TailEngine> engines;
  std::vector<std::string> failure_messages;  // first few, for diagnostics
  double wall_time_seconds = 0.0;
};

inline constexpr double kMaxFailureFraction = 0.01;
inline constexpr std::uint64_t kDesignStream = 0xd35169ULL << 32;

namespace detail {

struct Design {
  std::vector<double> gamma;
  std::vector<std::vector<double>> beta;  // per phenotype
};

inline Design draw_design(const SimConfig& cfg, Engine& eng) {
  Design d;
  d.gamma = draw_maf(cfg.maf, cfg.variants, eng);
  for (auto p : cfg.phenotypes) d.beta.push_back(resolve_effects(p.effects, cfg.variants, eng));
  return d;
}

inline PhenotypeKind observed_kind(PhenotypeModel::Kind k) {
  return k == PhenotypeModel::Kind::binary_logistic ? PhenotypeKind::binary : PhenotypeKind::continuous;
}

}  // namespace detail

/// Genotypes and phenotypes of replicate `r`; deterministic in (cfg.seed, r).
inline std::pair<GenotypeMatrix, PhenotypeTable> simulate_replicate(const SimConfig& cfg, std::size_t r) {
  auto eng = make_engine(cfg.seed, r);
  detail::Design design;
  if (cfg.fixed_design) {
    auto deng = make_engine(cfg.seed, kDesignStream);
    design = detail::draw_design(cfg, deng);
  } else {
    design = detail::draw_design(cfg, eng);
  }
  auto g = simulate_genotypes(cfg.n, design.gamma, eng);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(cfg.n), static_cast<Eigen::Index>(cfg.phenotypes.size()));
  std::vector<PhenotypeKind> kinds;
  for (std::size_t l = 0; l < cfg.phenotypes.size(); ++l) {
    y.col(static_cast<Eigen::Index>(l)) = simulate_phenotype(g, cfg.phenotypes[l].model, design.beta[l], eng);
    kinds.push_back(detail::observed_kind(cfg.phenotypes[l].model.kind));
  }
  PhenotypeTable t(std::move(y), std::move(kinds), {}, {}, g.subject_ids());
  return {std::move(g), std::move(t)};
}

/// Runs cfg.replicates independent null/alternative replicates. Per-replicate
/// failures are counted; more than 1% of them fails the run.
inline ExperimentSummary run_experiment(const SimConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSummary s;
  s.name = cfg.name;
  s.replicates = cfg.replicates;
  s.alpha = cfg.alpha;
  s.pvalues.assign(cfg.replicates, std::numeric_limits<double>::quiet_NaN());
  s.engines.assign(cfg.replicates, TailEngine::davies);
  std::vector<std::string> errors(cfg.replicates);

  GsuOptions opt;
  opt.genetic_kernel = cfg.genetic_kernel;
  opt.phenotype_kernel = cfg.phenotype_kernel;
  opt.null_calibration = cfg.null_calibration;

  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    try {
      const auto [g, y] = simulate_replicate(cfg, r);
      const auto res = gsu_test(g, y, opt);
      s.pvalues[r] = *res.p_asymptotic;
      s.engines[r] = res.p_engine;
    } catch (const Error& e) {
      errors[r] = e.what();
    }
  });

  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    if (std::isnan(s.pvalues[r])) {
      ++s.failures;
      if (s.failure_messages.size() < 5) s.failure_messages.push_back("replicate " + std::to_string(r) + ": " + errors[r]);
    } else {
      ++s.completed;
      if (s.pvalues[r] < cfg.alpha) ++s.rejections;
    }
  }
  s.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (static_cast<double>(s.failures) > kMaxFailureFraction * static_cast<double>(cfg.replicates)) {
    throw NumericalError(std::to_string(s.failures) + " of " + std::to_string(cfg.replicates) +
                         " replicates failed (limit 1%); first: " + s.failure_messages.front());
  }
  if (s.completed > 0) {
    const double r = static_cast<double>(s.rejections) / static_cast<double>(s.completed);
    s.rejection_rate = r;
    s.mc_stderr = std::sqrt(r * (1.0 - r) / static_cast<double>(s.completed));
  }
  return s;
}

// ---------------------------------------------------------------------------
// key = value experiment configs

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) throw InputError("config: invalid value '" + v + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError("config: invalid boolean '" + v + "' for " + key);
}

inline PhenotypeModel::Kind parse_model_kind(const std::string& v) {
  if (v == "binary" || v == "B") return PhenotypeModel::Kind::binary_logistic;
  if (v == "gaussian" || v == "G") return PhenotypeModel::Kind::gaussian;
  if (v == "cauchy" || v == "C") return PhenotypeModel::Kind::cauchy;
  throw InputError("config: unknown phenotype model '" + v + "' (binary, gaussian, cauchy)");
}

inline std::vector<PhenotypeModel::Kind> parse_phenotype_list(const std::string& v) {
  std::vector<PhenotypeModel::Kind> out;
  const bool compact = !v.empty() && v.find_first_not_of("BGC") == std::string::npos;
  if (compact) {
    for (char c : v) out.push_back(parse_model_kind(std::string(1, c)));
  } else {
    for (const auto& p : split(v, ',')) out.push_back(parse_model_kind(p));
  }
  return out;
}

inline const std::vector<std::string>& global_keys() {
  static const std::vector<std::string> keys{
      "name", "n", "variants", "replicates", "alpha", "seed", "threads", "fixed_design", "kernel", "pheno_sim",
      "null_calibration",
      "maf", "maf_value", "maf_min", "maf_max", "maf_beta_a", "maf_beta_b", "common_fraction", "common_min",
      "common_max", "phenotypes"};
  return keys;
}

// may carry a ".k" suffix (1-based phenotype index) to target one phenotype
inline const std::vector<std::string>& phenotype_keys() {
  static const std::vector<std::string> keys{"intercept", "sigma2", "cauchy_scale", "mu_beta", "sigma2_beta",
                                             "causal_fraction"};
  return keys;
}

inline std::string valid_keys_text() {
  std::string s;
  for (const auto& k : global_keys()) s += (s.empty() ? "" : ", ") + k;
  for (const auto& k : phenotype_keys()) s += ", " + k + "[.k]";
  return s;
}

inline void apply_phenotype_key(PhenotypeSpec& p, const std::string& key, const std::string& v) {
  if (key == "intercept") p.model.intercept = parse_number<double>(key, v);
  else if (key == "sigma2") p.model.sigma2 = parse_number<double>(key, v);
  else if (key == "cauchy_scale") p.model.scale = parse_number<double>(key, v);
  else if (key == "mu_beta") p.effects.mu_beta = parse_number<double>(key, v);
  else if (key == "sigma2_beta") p.effects.sigma2_beta = parse_number<double>(key, v);
  else if (key == "causal_fraction") p.effects.causal_fraction = parse_number<double>(key, v);
}

}  // namespace detail

/// Parses `key = value` lines ('#' starts a comment). Unknown keys are
/// rejected with the list of valid keys.
inline SimConfig parse_sim_config(std::string_view text, const std::string& source = "config") {
  struct Entry {
    std::string key, value;
    std::size_t line;
  };
  std::vector<Entry> entries;
  std::size_t line_no = 0;
  for (const auto& raw : detail::split(text, '\n')) {
    ++line_no;
    auto line = raw.substr(0, raw.find('#'));
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(source + ":" + std::to_string(line_no) + ": expected key = value");
    }
    entries.push_back({detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), line_no});
  }

  SimConfig cfg;
  std::vector<PhenotypeModel::Kind> kinds{PhenotypeModel::Kind::gaussian};
  const auto where = [&](const Entry& e) { return source + ":" + std::to_string(e.line) + ": "; };
  const auto is_global = [](const std::string& k) {
    const auto& g = detail::global_keys();
    return std::find(g.begin(), g.end(), k) != g.end();
  };
  const auto is_pheno = [](const std::string& k) {
    const auto& p = detail::phenotype_keys();
    return std::find(p.begin(), p.end(), k) != p.end();
  };

  // first pass: globals (the phenotype list fixes L for indexed keys)
  for (const auto& e : entries) {
    const auto base = e.key.substr(0, e.key.find('.'));
    if (!is_global(e.key) && !is_pheno(base)) {
      throw InputError(where(e) + "unknown key '" + e.key + "'; valid keys: " + detail::valid_keys_text());
    }
    if (!is_global(e.key)) continue;
    try {
      const auto& k = e.key;
      const auto& v = e.value;
      if (k == "name") cfg.name = v;
      else if (k == "n") cfg.n = detail::parse_number<std::size_t>(k, v);
      else if (k == "variants") cfg.variants = detail::parse_number<std::size_t>(k, v);
      else if (k == "replicates") cfg.replicates = detail::parse_number<std::size_t>(k, v);
      else if (k == "alpha") cfg.alpha = detail::parse_number<double>(k, v);
      else if (k == "seed") cfg.seed = detail::parse_number<std::uint64_t>(k, v);
      else if (k == "threads") cfg.threads = detail::parse_number<unsigned>(k, v);
      else if (k == "fixed_design") cfg.fixed_design = detail::parse_bool(k, v);
      else if (k == "kernel") {
        if (v == "ibs") cfg.genetic_kernel = GeneticKernel::ibs;
        else if (v == "wibs") cfg.genetic_kernel = GeneticKernel::wibs;
        else if (v == "ed") cfg.genetic_kernel = GeneticKernel::ed;
        else throw InputError("config: kernel must be ibs, wibs or ed");
      } else if (k == "pheno_sim") {
        if (v == "ed") cfg.phenotype_kernel = PhenotypeKernel::ed;
        else if (v == "ed-corr") cfg.phenotype_kernel = PhenotypeKernel::ed_corr;
        else throw InputError("config: pheno_sim must be ed or ed-corr");
      } else if (k == "null_calibration") {
        if (v == "exact-moments") cfg.null_calibration = NullCalibration::exact_moments;
        else if (v == "asymptotic") cfg.null_calibration = NullCalibration::asymptotic;
        else throw InputError("config: null_calibration must be exact-moments or asymptotic");
      } else if (k == "maf") {
        if (v == "fixed") cfg.maf.kind = MafSpectrum::Kind::fixed;
        else if (v == "uniform") cfg.maf.kind = MafSpectrum::Kind::uniform;
        else if (v == "rare") cfg.maf.kind = MafSpectrum::Kind::rare_enriched;
        else throw InputError("config: maf must be fixed, uniform or rare");
      } else if (k == "maf_value") cfg.maf.value = detail::parse_number<double>(k, v);
      else if (k == "maf_min") cfg.maf.lo = detail::parse_number<double>(k, v);
      else if (k == "maf_max") cfg.maf.hi = detail::parse_number<double>(k, v);
      else if (k == "maf_beta_a") cfg.maf.shape_a = detail::parse_number<double>(k, v);
      else if (k == "maf_beta_b") cfg.maf.shape_b = detail::parse_number<double>(k, v);
      else if (k == "common_fraction") cfg.maf.common_fraction = detail::parse_number<double>(k, v);
      else if (k == "common_min") cfg.maf.common_lo = detail::parse_number<double>(k, v);
      else if (k == "common_max") cfg.maf.common_hi = detail::parse_number<double>(k, v);
      else if (k == "phenotypes") kinds = detail::parse_phenotype_list(v);
    } catch (const InputError& err) {
      throw InputError(where(e) + err.what());
    }
  }

  cfg.phenotypes.assign(kinds.size(), PhenotypeSpec{});
  for (std::size_t l = 0; l < kinds.size(); ++l) cfg.phenotypes[l].model.kind = kinds[l];

  // unsuffixed phenotype keys apply to all, then ".k" overrides
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : entries) {
      if (is_global(e.key)) continue;
      const auto dot = e.key.find('.');
      const auto base = e.key.substr(0, dot);
      try {
        if (pass == 0 && dot == std::string::npos) {
          for (auto& p : cfg.phenotypes) detail::apply_phenotype_key(p, base, e.value);
        } else if (pass == 1 && dot != std::string::npos) {
          const auto idx = detail::parse_number<std::size_t>(e.key, e.key.substr(dot + 1));
          if (idx < 1 || idx > cfg.phenotypes.size()) {
            throw InputError("phenotype index " + std::to_string(idx) + " out of range 1.." +
                             std::to_string(cfg.phenotypes.size()));
          }
          detail::apply_phenotype_key(cfg.phenotypes[idx - 1], base, e.value);
        }
      } catch (const InputError& err) {
        throw InputError(where(e) + err.what());
      }
    }
  }
  try {
    cfg.validate();
  } catch (const InputError& err) {
    throw InputError(source + ": " + err.what());
  }
  return cfg;
}

inline SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sim_config(ss.str(), path);
}

}  // namespace gsu
