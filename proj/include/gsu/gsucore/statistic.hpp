#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/core/numeric.hpp"
#include "gsu/simkernel/similarity.hpp"

namespace gsu {

struct GsuStatistic {
  double u = 0.0;
  std::size_t n = 0;
  double scaled = 0.0;  // n * U, the scale of the null mixture
};

namespace detail {

inline void check_pair(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s) {
  if (k.values.rows() != k.values.cols() || s.values.rows() != s.values.cols()) {
    throw InputError("centered similarity matrices must be square");
  }
  if (k.values.rows() != s.values.rows()) {
    throw InputError("centered similarity matrices differ in size (" + std::to_string(k.values.rows()) + " vs " +
                     std::to_string(s.values.rows()) + ")");
  }
  if (k.values.rows() < 2) throw InputError("the U statistic needs at least 2 subjects");
  if (!k.subject_ids.empty() && !s.subject_ids.empty() && k.subject_ids != s.subject_ids) {
    throw InputError("centered similarity matrices use different subject orderings");
  }
}

/// sum_{i != j} a_ij b_{perm_i perm_j}, compensated, row-major order.
inline double off_diagonal_product_sum(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       std::span<const std::size_t> perm) {
  const auto n = a.rows();
  CompensatedSum sum;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto pj = static_cast<Eigen::Index>(perm.empty() ? static_cast<std::size_t>(j) : perm[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const auto pi = static_cast<Eigen::Index>(perm.empty() ? static_cast<std::size_t>(i) : perm[static_cast<std::size_t>(i)]);
      sum.add(a(i, j) * b(pi, pj));
    }
  }
  return sum.value();
}

inline GsuStatistic make_statistic(double off_diagonal_sum, std::size_t n) {
  const auto nd = static_cast<double>(n);
  GsuStatistic st;
  st.n = n;
  st.u = off_diagonal_sum / (nd * (nd - 1.0));
  st.scaled = nd * st.u;
  return st;
}

}  // namespace detail

/// U = 1/(n(n-1)) sum_{i != j} K~_ij S~_ij; the diagonal never enters.
inline GsuStatistic compute_u(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s) {
  detail::check_pair(k, s);
  return detail::make_statistic(detail::off_diagonal_product_sum(k.values, s.values, {}), k.size());
}

}  // namespace gsu
