#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"

namespace gsu {

/// n subjects by M variants, additive coding 0/1/2 with missing entries.
class GenotypeMatrix {
 public:
  static constexpr std::int8_t kMissing = -1;

  GenotypeMatrix() = default;

  /// `codes` is row-major (subject-major), size n*M.
  GenotypeMatrix(std::size_t subjects, std::size_t variants, std::vector<std::int8_t> codes,
                 std::vector<std::string> subject_ids = {}, std::vector<std::string> variant_ids = {})
      : n_(subjects), m_(variants), codes_(std::move(codes)),
        subject_ids_(std::move(subject_ids)), variant_ids_(std::move(variant_ids)) {
    if (n_ < 2) throw InputError("genotype matrix needs at least 2 subjects");
    if (m_ < 1) throw InputError("genotype matrix needs at least 1 variant");
    if (codes_.size() != n_ * m_) throw InputError("genotype code count does not match n*M");
    for (std::size_t k = 0; k < codes_.size(); ++k) {
      const auto c = codes_[k];
      if (c != kMissing && (c < 0 || c > 2)) {
        throw InputError("genotype code out of range at subject " + std::to_string(k / m_ + 1) +
                         ", variant " + std::to_string(k % m_ + 1));
      }
    }
    if (subject_ids_.empty()) {
      for (std::size_t i = 0; i < n_; ++i) subject_ids_.push_back("s" + std::to_string(i + 1));
    }
    if (variant_ids_.empty()) {
      for (std::size_t j = 0; j < m_; ++j) variant_ids_.push_back("v" + std::to_string(j + 1));
    }
    if (subject_ids_.size() != n_ || variant_ids_.size() != m_) {
      throw InputError("genotype id lists do not match matrix dimensions");
    }
  }

  [[nodiscard]] std::size_t subjects() const noexcept { return n_; }
  [[nodiscard]] std::size_t variants() const noexcept { return m_; }
  [[nodiscard]] std::int8_t at(std::size_t i, std::size_t m) const { return codes_[i * m_ + m]; }
  [[nodiscard]] bool missing(std::size_t i, std::size_t m) const { return at(i, m) == kMissing; }
  [[nodiscard]] const std::vector<std::int8_t>& codes() const noexcept { return codes_; }
  [[nodiscard]] const std::vector<std::string>& subject_ids() const noexcept { return subject_ids_; }
  [[nodiscard]] const std::vector<std::string>& variant_ids() const noexcept { return variant_ids_; }

  [[nodiscard]] bool has_missing() const {
    for (auto c : codes_) {
      if (c == kMissing) return true;
    }
    return false;
  }

  [[nodiscard]] GenotypeMatrix select_subjects(std::span<const std::size_t> rows) const {
    std::vector<std::int8_t> out;
    out.reserve(rows.size() * m_);
    std::vector<std::string> ids;
    for (auto r : rows) {
      out.insert(out.end(), codes_.begin() + static_cast<std::ptrdiff_t>(r * m_),
                 codes_.begin() + static_cast<std::ptrdiff_t>((r + 1) * m_));
      ids.push_back(subject_ids_[r]);
    }
    return {rows.size(), m_, std::move(out), std::move(ids), variant_ids_};
  }

  [[nodiscard]] GenotypeMatrix select_variants(std::span<const std::size_t> cols) const {
    std::vector<std::int8_t> out;
    out.reserve(n_ * cols.size());
    for (std::size_t i = 0; i < n_; ++i) {
      for (auto c : cols) out.push_back(at(i, c));
    }
    std::vector<std::string> ids;
    for (auto c : cols) ids.push_back(variant_ids_[c]);
    return {n_, cols.size(), std::move(out), subject_ids_, std::move(ids)};
  }

  friend bool operator==(const GenotypeMatrix&, const GenotypeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::int8_t> codes_;
  std::vector<std::string> subject_ids_;
  std::vector<std::string> variant_ids_;
};

/// Folded minor allele frequency per variant, each in [0, 0.5].
struct MafVector {
  std::vector<double> gamma;
};

/// Per-variant kernel weights and the wIBS scaling constant 2*sum(w).
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    double s = 0.0;
    for (std::size_t m = 0; m < w_.size(); ++m) {
      if (!std::isfinite(w_[m]) || w_[m] < 0.0) {
        throw InputError("variant weight " + std::to_string(m + 1) + " must be finite and nonnegative");
      }
      s += w_[m];
    }
    upsilon_ = 2.0 * s;
  }

  [[nodiscard]] const std::vector<double>& w() const noexcept { return w_; }
  [[nodiscard]] double upsilon() const noexcept { return upsilon_; }
  [[nodiscard]] std::size_t size() const noexcept { return w_.size(); }

 private:
  std::vector<double> w_;
  double upsilon_ = 0.0;
};

/// Unfolded alternate-allele frequency per variant over non-missing entries.
inline std::vector<double> allele_frequency(const GenotypeMatrix& g) {
  std::vector<double> p(g.variants(), 0.0);
  for (std::size_t m = 0; m < g.variants(); ++m) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.subjects(); ++i) {
      if (!g.missing(i, m)) {
        sum += g.at(i, m);
        ++count;
      }
    }
    if (count == 0) {
      throw InputError("variant '" + g.variant_ids()[m] + "' has no non-missing genotypes");
    }
    p[m] = sum / (2.0 * static_cast<double>(count));
  }
  return p;
}

inline MafVector compute_maf(const GenotypeMatrix& g) {
  MafVector maf;
  for (double p : allele_frequency(g)) maf.gamma.push_back(std::min(p, 1.0 - p));
  return maf;
}

/// w_m = 1/sqrt(gamma_m (1 - gamma_m)).
inline WeightVector maf_weights(const MafVector& maf) {
  std::vector<double> w;
  w.reserve(maf.gamma.size());
  for (std::size_t m = 0; m < maf.gamma.size(); ++m) {
    const double g = maf.gamma[m];
    if (!(g >= 0.0 && g <= 0.5)) throw InputError("MAF of variant " + std::to_string(m + 1) + " outside [0, 0.5]");
    if (g == 0.0) {
      throw InputError("variant " + std::to_string(m + 1) +
                       " is monomorphic (MAF 0); filter monomorphic variants before computing weights");
    }
    w.push_back(1.0 / std::sqrt(g * (1.0 - g)));
  }
  return WeightVector(std::move(w));
}

enum class MissingPolicy { impute_mean, drop_subject };

/// Genotypes ready for kernel construction: real-valued dosages with missing
/// cells filled, monomorphic variants removed.
struct PreparedGenotypes {
  Eigen::MatrixXd dosage;  // n x M'
  MafVector maf;           // aligned with dosage columns
  std::vector<std::size_t> kept_subjects;
  std::vector<std::size_t> kept_variants;
  std::size_t monomorphic_dropped = 0;
  std::size_t imputed_cells = 0;
};

inline PreparedGenotypes prepare_genotypes(const GenotypeMatrix& g, MissingPolicy policy) {
  PreparedGenotypes out;
  const GenotypeMatrix* src = &g;
  GenotypeMatrix subset;
  if (policy == MissingPolicy::drop_subject) {
    for (std::size_t i = 0; i < g.subjects(); ++i) {
      bool complete = true;
      for (std::size_t m = 0; m < g.variants() && complete; ++m) complete = !g.missing(i, m);
      if (complete) out.kept_subjects.push_back(i);
    }
    if (out.kept_subjects.size() < 2) {
      throw InputError("fewer than 2 subjects have complete genotypes under the drop-subject policy");
    }
    if (out.kept_subjects.size() != g.subjects()) {
      subset = g.select_subjects(out.kept_subjects);
      src = &subset;
    }
  } else {
    for (std::size_t i = 0; i < g.subjects(); ++i) out.kept_subjects.push_back(i);
  }

  const auto p = allele_frequency(*src);
  for (std::size_t m = 0; m < src->variants(); ++m) {
    const double gamma = std::min(p[m], 1.0 - p[m]);
    if (gamma == 0.0) {
      ++out.monomorphic_dropped;
    } else {
      out.kept_variants.push_back(m);
      out.maf.gamma.push_back(gamma);
    }
  }
  if (out.kept_variants.empty()) throw InputError("no polymorphic variants remain after filtering");

  out.dosage.resize(static_cast<Eigen::Index>(src->subjects()), static_cast<Eigen::Index>(out.kept_variants.size()));
  for (std::size_t k = 0; k < out.kept_variants.size(); ++k) {
    const auto m = out.kept_variants[k];
    for (std::size_t i = 0; i < src->subjects(); ++i) {
      double v;
      if (src->missing(i, m)) {
        v = 2.0 * p[m];
        ++out.imputed_cells;
      } else {
        v = src->at(i, m);
      }
      out.dosage(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return out;
}

/// Dosage matrix of a fully observed genotype matrix; errors on missing cells.
inline Eigen::MatrixXd complete_dosage(const GenotypeMatrix& g) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(g.subjects()), static_cast<Eigen::Index>(g.variants()));
  for (std::size_t i = 0; i < g.subjects(); ++i) {
    for (std::size_t m = 0; m < g.variants(); ++m) {
      if (g.missing(i, m)) {
        throw InputError("missing genotype at subject '" + g.subject_ids()[i] + "', variant '" +
                         g.variant_ids()[m] + "'; impute or filter before building kernels");
      }
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m)) = g.at(i, m);
    }
  }
  return d;
}

}  // namespace gsu
