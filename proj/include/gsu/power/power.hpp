#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gsu/core/error.hpp"
#include "gsu/core/numeric.hpp"
#include "gsu/gsucore/gsu_test.hpp"
#include "gsu/gsucore/spectrum.hpp"
#include "gsu/qfdist/mixture.hpp"
#include "gsu/qfdist/tail.hpp"

namespace gsu {

/// Moments of the product kernel u = f~ h~ under the alternative.
struct AlternativeMoments {
  double mu = 0.0;
  double zeta1 = 0.0;
  double zeta0 = std::numeric_limits<double>::quiet_NaN();  // diagnostic only
};

struct PowerResult {
  double power = 0.0;
  std::size_t n = 0;
  double alpha = 0.0;
  double q_crit = 0.0;
  std::vector<std::string> warnings;
};

struct SampleSizeResult {
  std::size_t n = 0;
  double target_power = 0.0;
  double achieved_power = 0.0;
  double closed_form = 0.0;  // the unrounded bound
  double alpha = 0.0;
  double q_crit = 0.0;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinPilotSubjects = 20;
inline constexpr std::size_t kNormalApproxWarnBelow = 100;

namespace detail {

inline void check_moments(const AlternativeMoments& m) {
  if (!(m.mu > 0.0) || !std::isfinite(m.mu)) {
    throw InputError("mu must be positive (no detectable association otherwise)");
  }
  if (!(m.zeta1 > 0.0) || !std::isfinite(m.zeta1)) throw InputError("zeta1 must be positive");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
}

inline std::string small_n_warning(std::size_t n) {
  return "n = " + std::to_string(n) +
         " is below 100; the normal approximation ignores the degenerate remainder and may be poor";
}

}  // namespace detail

/// Power at a precomputed critical value q_{1-alpha}.
inline double power_at(const AlternativeMoments& m, double q_crit, std::size_t n) {
  const auto nd = static_cast<double>(n);
  return normal_cdf((nd * m.mu - q_crit) / (2.0 * std::sqrt(nd * m.zeta1)));
}

/// Phi((n mu - q_{1-alpha}) / (2 sqrt(n zeta1))), q from the null mixture.
inline PowerResult compute_power(const AlternativeMoments& m, const ChiSquareMixture& mixture, double alpha,
                                 std::size_t n, const QfAccuracy& acc = {}) {
  detail::check_moments(m);
  detail::check_alpha(alpha);
  if (n < 2) throw InputError("n must be at least 2");
  PowerResult r;
  r.n = n;
  r.alpha = alpha;
  r.q_crit = mixture_quantile(mixture, 1.0 - alpha, acc);
  r.power = power_at(m, r.q_crit, n);
  if (n < kNormalApproxWarnBelow) r.warnings.push_back(detail::small_n_warning(n));
  return r;
}

/// Closed-form bound n >= (Z sqrt(zeta1) + sqrt(Z^2 zeta1 + mu q))^2 / mu^2,
/// written so that Z = 0 gives q / mu without rounding detours.
inline double sample_size_bound(const AlternativeMoments& m, double q_crit, double beta) {
  const double z = normal_quantile(beta);
  const double disc = z * z * m.zeta1 + m.mu * q_crit;
  if (disc < 0.0) return 0.0;  // every n reaches the target
  const double sz = std::sqrt(m.zeta1);
  return (2.0 * z * z * m.zeta1 + 2.0 * z * sz * std::sqrt(disc)) / (m.mu * m.mu) + q_crit / m.mu;
}

/// Smallest n meeting the power target, cross-checked against compute_power.
inline SampleSizeResult required_sample_size(const AlternativeMoments& m, const ChiSquareMixture& mixture,
                                             double alpha, double beta, const QfAccuracy& acc = {}) {
  detail::check_moments(m);
  detail::check_alpha(alpha);
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("target power must lie in (0, 1)");
  SampleSizeResult r;
  r.alpha = alpha;
  r.target_power = beta;
  r.q_crit = mixture_quantile(mixture, 1.0 - alpha, acc);
  r.closed_form = sample_size_bound(m, r.q_crit, beta);
  if (!std::isfinite(r.closed_form) || r.closed_form > 1e15) {
    throw NumericalError("sample-size bound is not finite");
  }
  const auto formula_n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(r.closed_form)));
  std::size_t n = formula_n;
  // the bound and the power function can disagree at a rounding boundary;
  // one subject of slack is tolerated, more signals a numerical fault
  if (power_at(m, r.q_crit, n) < beta) ++n;
  if (n > 2 && power_at(m, r.q_crit, n - 1) >= beta) --n;
  const bool ok = power_at(m, r.q_crit, n) >= beta && (n == 2 || power_at(m, r.q_crit, n - 1) < beta);
  if (!ok || (n > formula_n ? n - formula_n : formula_n - n) > 1) {
    throw NumericalError("closed-form sample size " + std::to_string(formula_n) +
                         " disagrees with the power function by more than one subject");
  }
  r.n = n;
  r.achieved_power = power_at(m, r.q_crit, n);
  if (n < kNormalApproxWarnBelow) r.warnings.push_back(detail::small_n_warning(n));
  return r;
}

struct MomentEstimate {
  AlternativeMoments moments;
  NullMixture null;  // spectrum of the pilot kernels, used for q_{1-alpha}
  std::size_t n = 0;
  std::vector<std::string> warnings;
};

/// Plug-in moments from centered pilot kernels: mu = U, zeta1 = sample
/// variance of the row means of K~ S~ (diagonal excluded), zeta0 = sample
/// variance of the off-diagonal products.
inline AlternativeMoments moments_from_kernels(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s) {
  detail::check_pair(k, s);
  const auto n = k.values.rows();
  std::vector<double> row_means(static_cast<std::size_t>(n));
  std::vector<double> products;
  products.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i) {
    CompensatedSum row;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double u = k.values(i, j) * s.values(i, j);
      row.add(u);
      products.push_back(u);
    }
    row_means[static_cast<std::size_t>(i)] = row.value() / static_cast<double>(n - 1);
  }
  AlternativeMoments m;
  m.mu = compute_u(k, s).u;
  m.zeta1 = sample_variance(row_means);
  m.zeta0 = sample_variance(products);
  return m;
}

inline MomentEstimate estimate_moments(const GenotypeMatrix& g, const PhenotypeTable& y, const GsuOptions& opt = {}) {
  auto kernels = build_centered_kernels(g, y, opt);
  if (kernels.n < kMinPilotSubjects) {
    throw InputError("pilot data needs at least " + std::to_string(kMinPilotSubjects) + " subjects (got " +
                     std::to_string(kernels.n) + ")");
  }
  MomentEstimate est;
  est.n = kernels.n;
  est.warnings = std::move(kernels.warnings);
  est.moments = moments_from_kernels(kernels.genetic, kernels.phenotypic);
  if (!(est.moments.mu > 0.0)) throw InputError("no detectable association in pilot data (estimated mu <= 0)");
  if (est.n < kNormalApproxWarnBelow) {
    est.warnings.push_back("pilot n = " + std::to_string(est.n) + " is below 100; moment estimates are noisy");
  }
  const auto spec = eigen_spectrum(kernels.genetic, kernels.phenotypic, opt.spectrum_tol);
  est.null = null_mixture(spec, kernels.n, opt.spectrum_tol, opt.mixture_cap);
  return est;
}

}  // namespace gsu
