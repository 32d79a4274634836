#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/core/numeric.hpp"

namespace gsu {

enum class PhenotypeKind { binary, continuous };

inline const char* to_string(PhenotypeKind k) { return k == PhenotypeKind::binary ? "binary" : "continuous"; }

/// n subjects by L phenotypes. NaN marks a missing value; downstream
/// transforms reject it.
class PhenotypeTable {
 public:
  PhenotypeTable() = default;

  /// Empty `weights` means equal weights 1/L.
  PhenotypeTable(Eigen::MatrixXd values, std::vector<PhenotypeKind> kinds, std::vector<double> weights = {},
                 std::vector<std::string> names = {}, std::vector<std::string> subject_ids = {})
      : values_(std::move(values)), kinds_(std::move(kinds)), weights_(std::move(weights)),
        names_(std::move(names)), subject_ids_(std::move(subject_ids)) {
    const auto n = static_cast<std::size_t>(values_.rows());
    const auto l = static_cast<std::size_t>(values_.cols());
    if (l == 0) throw InputError("phenotype table needs at least one column");
    if (kinds_.size() != l) throw InputError("phenotype kind list does not match column count");
    if (weights_.empty()) weights_.assign(l, 1.0 / static_cast<double>(l));
    if (weights_.size() != l) throw InputError("phenotype weight list does not match column count");
    for (std::size_t c = 0; c < l; ++c) {
      if (!(weights_[c] >= 0.0) || !std::isfinite(weights_[c])) {
        throw InputError("phenotype weight " + std::to_string(c + 1) + " must be finite and nonnegative");
      }
    }
    if (names_.empty()) {
      for (std::size_t c = 0; c < l; ++c) names_.push_back("y" + std::to_string(c + 1));
    }
    if (subject_ids_.empty()) {
      for (std::size_t i = 0; i < n; ++i) subject_ids_.push_back("s" + std::to_string(i + 1));
    }
    if (names_.size() != l || subject_ids_.size() != n) {
      throw InputError("phenotype id lists do not match table dimensions");
    }
    for (std::size_t c = 0; c < l; ++c) {
      if (kinds_[c] != PhenotypeKind::binary) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        if (!std::isnan(v) && v != 0.0 && v != 1.0) {
          throw InputError("binary phenotype '" + names_[c] + "' has non 0/1 value at subject '" +
                           subject_ids_[i] + "'");
        }
      }
    }
  }

  [[nodiscard]] std::size_t subjects() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  [[nodiscard]] std::size_t columns() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<PhenotypeKind>& kinds() const noexcept { return kinds_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }

  [[nodiscard]] PhenotypeTable select_subjects(const std::vector<std::size_t>& rows) const {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      v.row(static_cast<Eigen::Index>(k)) = values_.row(static_cast<Eigen::Index>(rows[k]));
      ids.push_back(subject_ids_[rows[k]]);
    }
    return {std::move(v), kinds_, weights_, names_, std::move(ids)};
  }

  /// Same table with replaced values, all columns retagged continuous.
  [[nodiscard]] PhenotypeTable with_values(Eigen::MatrixXd v) const {
    return {std::move(v), std::vector<PhenotypeKind>(columns(), PhenotypeKind::continuous), weights_, names_,
            subject_ids_};
  }

 private:
  Eigen::MatrixXd values_;
  std::vector<PhenotypeKind> kinds_;
  std::vector<double> weights_;
  std::vector<std::string> names_;
  std::vector<std::string> subject_ids_;
};

/// Normal quantiles of within-column ranks.
struct QuantileMatrix {
  Eigen::MatrixXd q;                          // n x L
  std::vector<std::size_t> constant_columns;  // columns whose values all tie (q == 0)
};

/// Ranks 1..n with tied values sharing their average rank.
inline std::vector<double> average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(static_cast<Eigen::Index>(a)) < x(static_cast<Eigen::Index>(b));
  });
  std::vector<double> rank(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && x(static_cast<Eigen::Index>(order[end])) == x(static_cast<Eigen::Index>(order[start]))) ++end;
    // positions start..end-1 hold ranks start+1..end
    const double avg = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t k = start; k < end; ++k) rank[order[k]] = avg;
    start = end;
  }
  return rank;
}

/// q_{i,l} = Phi^{-1}((rank(y_{i,l}) - 0.5) / n), average ranks on ties.
inline QuantileMatrix rank_quantile_transform(const PhenotypeTable& y) {
  const auto n = y.subjects();
  if (n < 2) throw InputError("rank quantile transform needs at least 2 subjects");
  QuantileMatrix out;
  out.q.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(y.columns()));
  for (std::size_t c = 0; c < y.columns(); ++c) {
    const auto col = y.values().col(static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(col(static_cast<Eigen::Index>(i)))) {
        throw InputError("missing value in phenotype '" + y.names()[c] + "' at subject '" + y.subject_ids()[i] + "'");
      }
    }
    const auto rank = average_ranks(col);
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = col(static_cast<Eigen::Index>(i)) == col(0);
    if (constant) out.constant_columns.push_back(c);
    for (std::size_t i = 0; i < n; ++i) {
      out.q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          constant ? 0.0 : normal_quantile((rank[i] - 0.5) / static_cast<double>(n));
    }
  }
  return out;
}

}  // namespace gsu
