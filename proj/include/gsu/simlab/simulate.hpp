#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/cauchy_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/core/rng.hpp"
#include "gsu/simkernel/genotype.hpp"

namespace gsu {

/// Distribution of per-variant minor allele frequencies.
struct MafSpectrum {
  enum class Kind { fixed, uniform, rare_enriched };
  Kind kind = Kind::rare_enriched;
  double value = 0.5;          // fixed
  double lo = 0.001;           // uniform, and the rare part of rare_enriched
  double hi = 0.05;
  double shape_a = 1.0;        // Beta(a, b) rescaled onto (lo, hi)
  double shape_b = 3.0;
  double common_fraction = 0.2;
  double common_lo = 0.05;
  double common_hi = 0.5;

  static MafSpectrum fixed_at(double g) {
    MafSpectrum s;
    s.kind = Kind::fixed;
    s.value = g;
    return s;
  }
  static MafSpectrum uniform_on(double a, double b) {
    MafSpectrum s;
    s.kind = Kind::uniform;
    s.lo = a;
    s.hi = b;
    return s;
  }

  void validate() const {
    const auto in_range = [](double g) { return g > 0.0 && g <= 0.5; };
    switch (kind) {
      case Kind::fixed:
        if (!in_range(value)) throw InputError("fixed MAF must lie in (0, 0.5]");
        break;
      case Kind::rare_enriched:
        if (!(shape_a > 0.0 && shape_b > 0.0)) throw InputError("MAF beta shapes must be positive");
        if (!(common_fraction >= 0.0 && common_fraction <= 1.0)) {
          throw InputError("common-variant fraction must lie in [0, 1]");
        }
        if (!(in_range(common_lo) && in_range(common_hi) && common_lo <= common_hi)) {
          throw InputError("common MAF range must satisfy 0 < lo <= hi <= 0.5");
        }
        [[fallthrough]];
      case Kind::uniform:
        if (!(in_range(lo) && in_range(hi) && lo <= hi)) throw InputError("MAF range must satisfy 0 < lo <= hi <= 0.5");
        break;
    }
  }
};

inline const char* to_string(MafSpectrum::Kind k) {
  switch (k) {
    case MafSpectrum::Kind::fixed: return "fixed";
    case MafSpectrum::Kind::uniform: return "uniform";
    case MafSpectrum::Kind::rare_enriched: return "rare";
  }
  return "unknown";
}

inline std::vector<double> draw_maf(const MafSpectrum& spec, std::size_t variants, Engine& eng) {
  spec.validate();
  std::vector<double> gamma(variants);
  boost::random::uniform_01<double> u01;
  for (auto& g : gamma) {
    switch (spec.kind) {
      case MafSpectrum::Kind::fixed:
        g = spec.value;
        break;
      case MafSpectrum::Kind::uniform:
        g = spec.lo + (spec.hi - spec.lo) * u01(eng);
        break;
      case MafSpectrum::Kind::rare_enriched:
        if (u01(eng) < spec.common_fraction) {
          g = spec.common_lo + (spec.common_hi - spec.common_lo) * u01(eng);
        } else {
          boost::random::beta_distribution<double> beta(spec.shape_a, spec.shape_b);
          g = spec.lo + (spec.hi - spec.lo) * beta(eng);
        }
        break;
    }
  }
  return gamma;
}

/// Genotypes ~ Binomial(2, gamma_m), i.i.d. over subjects.
inline GenotypeMatrix simulate_genotypes(std::size_t n, const std::vector<double>& gamma, Engine& eng) {
  std::vector<std::int8_t> codes(n * gamma.size());
  boost::random::uniform_01<double> u01;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < gamma.size(); ++m) {
      const int a = (u01(eng) < gamma[m]) + (u01(eng) < gamma[m]);
      codes[i * gamma.size() + m] = static_cast<std::int8_t>(a);
    }
  }
  return {n, gamma.size(), std::move(codes)};
}

inline GenotypeMatrix simulate_genotypes(std::size_t n, std::size_t variants, const MafSpectrum& spec,
                                         std::uint64_t seed) {
  auto eng = make_engine(seed, 0);
  const auto gamma = draw_maf(spec, variants, eng);
  return simulate_genotypes(n, gamma, eng);
}

/// Effects of one phenotype: Uniform(mu -+ sqrt(3 sigma2)) on a random
/// causal subset, zero elsewhere.
struct EffectSpec {
  double mu_beta = 0.0;
  double sigma2_beta = 0.0;
  double causal_fraction = 0.2;
  std::vector<std::size_t> causal_indices;  // filled by resolve_effects

  void validate() const {
    if (!(sigma2_beta >= 0.0) || !std::isfinite(sigma2_beta)) throw InputError("sigma2_beta must be >= 0");
    if (!std::isfinite(mu_beta)) throw InputError("mu_beta must be finite");
    if (!(causal_fraction > 0.0 && causal_fraction <= 1.0)) throw InputError("causal fraction must lie in (0, 1]");
  }
  [[nodiscard]] bool is_null() const { return mu_beta == 0.0 && sigma2_beta == 0.0; }
};

/// Per-variant effects; `spec.causal_indices` receives the chosen set.
inline std::vector<double> resolve_effects(EffectSpec& spec, std::size_t variants, Engine& eng) {
  spec.validate();
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.causal_fraction * static_cast<double>(variants))), 1, variants);
  std::vector<std::size_t> idx(variants);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    boost::random::uniform_int_distribution<std::size_t> pick(i, variants - 1);
    std::swap(idx[i], idx[pick(eng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  spec.causal_indices = idx;

  std::vector<double> beta(variants, 0.0);
  const double half = std::sqrt(3.0 * spec.sigma2_beta);
  boost::random::uniform_01<double> u01;
  for (auto m : idx) beta[m] = spec.mu_beta - half + 2.0 * half * u01(eng);
  return beta;
}

struct PhenotypeModel {
  enum class Kind { binary_logistic, gaussian, cauchy };
  Kind kind = Kind::gaussian;
  double intercept = 0.0;
  double sigma2 = 1.0;  // gaussian noise variance
  double scale = 1.0;   // cauchy b

  void validate() const {
    if (!std::isfinite(intercept)) throw InputError("intercept must be finite");
    if (kind == Kind::gaussian && !(sigma2 > 0.0)) throw InputError("gaussian noise variance must be positive");
    if (kind == Kind::cauchy && !(scale > 0.0)) throw InputError("cauchy scale must be positive");
  }
};

inline const char* to_string(PhenotypeModel::Kind k) {
  switch (k) {
    case PhenotypeModel::Kind::binary_logistic: return "binary";
    case PhenotypeModel::Kind::gaussian: return "gaussian";
    case PhenotypeModel::Kind::cauchy: return "cauchy";
  }
  return "unknown";
}

/// One phenotype column given resolved effects. Missing genotypes count as 0.
inline Eigen::VectorXd simulate_phenotype(const GenotypeMatrix& g, const PhenotypeModel& model,
                                          const std::vector<double>& beta, Engine& eng) {
  model.validate();
  if (beta.size() != g.variants()) throw InputError("effect vector does not match the variant count");
  const auto n = g.subjects();
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  boost::random::uniform_01<double> u01;
  boost::random::normal_distribution<double> noise(0.0, std::sqrt(model.sigma2));
  boost::random::cauchy_distribution<double> cauchy(0.0, model.scale);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = model.intercept;
    for (std::size_t m = 0; m < beta.size(); ++m) {
      if (beta[m] != 0.0 && !g.missing(i, m)) eta += beta[m] * g.at(i, m);
    }
    double v = 0.0;
    switch (model.kind) {
      case PhenotypeModel::Kind::binary_logistic:
        v = u01(eng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
        break;
      case PhenotypeModel::Kind::gaussian:
        v = eta + noise(eng);
        break;
      case PhenotypeModel::Kind::cauchy:
        v = eta + cauchy(eng);
        break;
    }
    y(static_cast<Eigen::Index>(i)) = v;
  }
  return y;
}

inline Eigen::VectorXd simulate_phenotype(const GenotypeMatrix& g, const PhenotypeModel& model, EffectSpec& effects,
                                          std::uint64_t seed) {
  auto eng = make_engine(seed, 0);
  const auto beta = resolve_effects(effects, g.variants(), eng);
  return simulate_phenotype(g, model, beta, eng);
}

}  // namespace gsu
