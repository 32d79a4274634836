#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "gsu/core/error.hpp"
#include "gsu/core/numeric.hpp"

namespace gsu {

/// Law of sum_i w_i X_i (centered: sum_i w_i (X_i - 1)) with X_i independent
/// 1-df chi-square variables.
class ChiSquareMixture {
 public:
  ChiSquareMixture() = default;
  explicit ChiSquareMixture(std::vector<double> weights, bool centered = true)
      : weights_(std::move(weights)), centered_(centered) {
    if (weights_.empty()) throw InputError("chi-square mixture needs at least one weight");
    CompensatedSum s;
    for (double w : weights_) {
      if (!std::isfinite(w) || w == 0.0) throw InputError("chi-square mixture weights must be finite and nonzero");
      s.add(w);
    }
    weight_sum_ = s.value();
  }

  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] bool centered() const noexcept { return centered_; }
  [[nodiscard]] std::size_t size() const noexcept { return weights_.size(); }
  [[nodiscard]] double weight_sum() const noexcept { return weight_sum_; }

  /// Power sum sum_i w_i^r.
  [[nodiscard]] double power_sum(int r) const {
    CompensatedSum s;
    for (double w : weights_) s.add(std::pow(w, r));
    return s.value();
  }

  /// r-th cumulant: 2^{r-1} (r-1)! sum w^r, with the first shifted by -sum w
  /// for the centered law.
  [[nodiscard]] double cumulant(int r) const {
    if (r < 1) throw InputError("cumulant order must be positive");
    if (r == 1) return centered_ ? 0.0 : weight_sum_;
    double factorial = 1.0;
    for (int k = 2; k < r; ++k) factorial *= k;
    return std::ldexp(1.0, r - 1) * factorial * power_sum(r);
  }

  [[nodiscard]] double mean() const { return cumulant(1); }
  [[nodiscard]] double variance() const { return cumulant(2); }

  /// Point of the uncentered sum sum_i w_i X_i matching `x` of this law.
  [[nodiscard]] double uncentered_point(double x) const noexcept { return centered_ ? x + weight_sum_ : x; }

  [[nodiscard]] ChiSquareMixture scaled(double c) const {
    std::vector<double> w = weights_;
    for (double& v : w) v *= c;
    return ChiSquareMixture(std::move(w), centered_);
  }

 private:
  std::vector<double> weights_;
  bool centered_ = true;
  double weight_sum_ = 0.0;
};

/// Accuracy and budget settings shared by the tail engines.
struct QfAccuracy {
  double target_abs_error = 1e-9;
  std::size_t integration_terms_limit = 1'000'000;
  std::size_t mc_draws = 1'000'000;
  std::uint64_t mc_seed = 0x5eedULL;
  /// Davies results whose error bound exceeds this are not accepted.
  double davies_max_error = 1e-6;
};

}  // namespace gsu
