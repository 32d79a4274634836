#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace gsu {

/// Neumaier-compensated accumulator; summation order stays the caller's.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double normal_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

/// Kolmogorov-Smirnov distance between the sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf&& cdf) {
  if (sample.empty()) return 1.0;
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return v.empty() ? 0.0 : s.value() / static_cast<double>(v.size());
}

/// Sample variance with the n-1 denominator.
inline double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return s.value() / static_cast<double>(v.size() - 1);
}

}  // namespace gsu
