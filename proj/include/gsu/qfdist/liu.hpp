#pragma once

// Four-cumulant matching to a scaled noncentral chi-square (Liu, Tang and
// Zhang 2009). Fast and total, but only an approximation in the far tails.

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include "gsu/core/numeric.hpp"
#include "gsu/qfdist/mixture.hpp"

namespace gsu {

struct LiuParameters {
  double df = 0.0;           // l
  double noncentrality = 0.0;
  double mean_q = 0.0;       // of the uncentered sum
  double sd_q = 0.0;
  double mean_x = 0.0;       // of the surrogate
  double sd_x = 0.0;
  bool reflected = false;    // fitted to -Q because Q is left-skewed
  bool normal_limit = false;  // skewness ~ 0: surrogate replaced by its normal limit
};

namespace detail {

inline LiuParameters liu_fit(double c1, double c2, double c3, double c4) {
  LiuParameters p;
  p.mean_q = c1;
  p.sd_q = std::sqrt(2.0 * c2);
  p.reflected = c3 < 0.0;
  if (p.reflected) c3 = -c3;  // fit the right-skewed law of -Q
  const double s1 = c3 / std::pow(c2, 1.5);
  const double s2 = c4 / (c2 * c2);
  double a;
  if (s1 * s1 > s2) {
    a = 1.0 / (s1 - std::sqrt(s1 * s1 - s2));
    p.noncentrality = s1 * a * a * a - a * a;
    p.df = a * a - 2.0 * p.noncentrality;
  } else {
    a = 1.0 / s1;
    p.noncentrality = 0.0;
    p.df = c2 * c2 * c2 / (c3 * c3);
  }
  p.normal_limit = !(std::isfinite(p.df) && p.df < 1e10 && std::isfinite(a));
  p.mean_x = p.df + p.noncentrality;
  p.sd_x = std::sqrt(2.0) * a;
  return p;
}

inline double chi_square_upper(double t, const LiuParameters& p) {
  if (t <= 0.0) return 1.0;
  if (p.noncentrality > 0.0) {
    return boost::math::cdf(boost::math::complement(
        boost::math::non_central_chi_squared_distribution<double>(p.df, p.noncentrality), t));
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(p.df), t));
}

}  // namespace detail

inline LiuParameters liu_parameters(const ChiSquareMixture& m) {
  return detail::liu_fit(m.power_sum(1), m.power_sum(2), m.power_sum(3), m.power_sum(4));
}

/// Approximate P(Q > x).
inline double liu_survival(const ChiSquareMixture& m, double x) {
  const auto p = liu_parameters(m);
  double tstar = (m.uncentered_point(x) - p.mean_q) / p.sd_q;
  if (p.reflected) tstar = -tstar;  // P(Q > x) = 1 - P(-Q > -x)
  double upper;
  if (p.normal_limit) {
    upper = 1.0 - normal_cdf(tstar);
  } else {
    upper = detail::chi_square_upper(tstar * p.sd_x + p.mean_x, p);
  }
  const double s = p.reflected ? 1.0 - upper : upper;
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace gsu
