#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/simkernel/genotype.hpp"
#include "gsu/simkernel/phenotype.hpp"

namespace gsu {

enum class SimilarityKind { genetic, phenotypic };

/// Symmetric n x n similarity matrix with the kernel that produced it.
struct SimilarityMatrix {
  Eigen::MatrixXd values;
  SimilarityKind kind = SimilarityKind::genetic;
  std::string provenance;
  std::vector<std::string> subject_ids;  // optional; checked for alignment when both sides carry ids

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Double-centered (or covariate-projected) similarity matrix.
struct CenteredSimilarityMatrix {
  Eigen::MatrixXd values;
  std::string source;
  std::vector<std::string> subject_ids;

  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// n x p design matrix; callers include the intercept column themselves.
struct CovariateMatrix {
  Eigen::MatrixXd x;

  static CovariateMatrix intercept_only(std::size_t n) {
    return {Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), 1)};
  }
  static CovariateMatrix with_intercept(const Eigen::MatrixXd& covariates) {
    Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(covariates.cols()) = covariates;
    return {std::move(x)};
  }
};

namespace detail {

/// Fills the upper triangle with pair(i, j) and mirrors it. The diagonal is
/// computed too; kernels here all give exactly 1 for identical rows.
template <class Pair>
Eigen::MatrixXd symmetric_from_pairs(std::size_t n, Pair&& pair) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = pair(i, j);
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      k(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return k;
}

inline void check_weights(const Eigen::MatrixXd& dosage, const WeightVector& w) {
  if (w.size() != static_cast<std::size_t>(dosage.cols())) {
    throw InputError("weight vector has " + std::to_string(w.size()) + " entries but genotype matrix has " +
                     std::to_string(dosage.cols()) + " variants");
  }
}

}  // namespace detail

/// K_ij = (1/2M) sum_m (2 - |g_im - g_jm|) over a dosage matrix (n x M).
inline SimilarityMatrix ibs_similarity(const Eigen::MatrixXd& dosage) {
  const Eigen::MatrixXd gt = dosage.transpose();
  const auto m = static_cast<double>(gt.rows());
  auto k = detail::symmetric_from_pairs(static_cast<std::size_t>(gt.cols()), [&](std::size_t i, std::size_t j) {
    const auto a = gt.col(static_cast<Eigen::Index>(i));
    const auto b = gt.col(static_cast<Eigen::Index>(j));
    double s = 0.0;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) s += 2.0 - std::abs(a(r) - b(r));
    return s / (2.0 * m);
  });
  return {std::move(k), SimilarityKind::genetic, "ibs", {}};
}

inline SimilarityMatrix ibs_similarity(const GenotypeMatrix& g) {
  auto s = ibs_similarity(complete_dosage(g));
  s.subject_ids = g.subject_ids();
  return s;
}

/// K_ij = sum_m w_m (2 - |g_im - g_jm|) / Upsilon.
inline SimilarityMatrix wibs_similarity(const Eigen::MatrixXd& dosage, const WeightVector& w) {
  detail::check_weights(dosage, w);
  if (!(w.upsilon() > 0.0)) throw InputError("wIBS needs a positive weight sum");
  const Eigen::MatrixXd gt = dosage.transpose();
  const auto& wv = w.w();
  auto k = detail::symmetric_from_pairs(static_cast<std::size_t>(gt.cols()), [&](std::size_t i, std::size_t j) {
    const auto a = gt.col(static_cast<Eigen::Index>(i));
    const auto b = gt.col(static_cast<Eigen::Index>(j));
    double s = 0.0;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) s += wv[static_cast<std::size_t>(r)] * (2.0 - std::abs(a(r) - b(r)));
    return s / w.upsilon();
  });
  return {std::move(k), SimilarityKind::genetic, "wibs", {}};
}

inline SimilarityMatrix wibs_similarity(const GenotypeMatrix& g, const WeightVector& w) {
  auto s = wibs_similarity(complete_dosage(g), w);
  s.subject_ids = g.subject_ids();
  return s;
}

/// K_ij = exp(-sum_m w_m (g_im - g_jm)^2).
inline SimilarityMatrix ed_genotype_similarity(const Eigen::MatrixXd& dosage, const WeightVector& w) {
  detail::check_weights(dosage, w);
  const Eigen::MatrixXd gt = dosage.transpose();
  const auto& wv = w.w();
  auto k = detail::symmetric_from_pairs(static_cast<std::size_t>(gt.cols()), [&](std::size_t i, std::size_t j) {
    const auto a = gt.col(static_cast<Eigen::Index>(i));
    const auto b = gt.col(static_cast<Eigen::Index>(j));
    double s = 0.0;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) {
      const double d = a(r) - b(r);
      s += wv[static_cast<std::size_t>(r)] * d * d;
    }
    return std::exp(-s);
  });
  return {std::move(k), SimilarityKind::genetic, "ed", {}};
}

inline SimilarityMatrix ed_genotype_similarity(const GenotypeMatrix& g, const WeightVector& w) {
  auto s = ed_genotype_similarity(complete_dosage(g), w);
  s.subject_ids = g.subject_ids();
  return s;
}

/// S_ij = exp(-sum_l omega_l (q_il - q_jl)^2).
inline SimilarityMatrix ed_phenotype_similarity(const QuantileMatrix& q, std::span<const double> omega) {
  if (omega.size() != static_cast<std::size_t>(q.q.cols())) {
    throw InputError("phenotype weight count does not match quantile matrix columns");
  }
  for (std::size_t l = 0; l < omega.size(); ++l) {
    if (!(omega[l] >= 0.0)) throw InputError("phenotype weight " + std::to_string(l + 1) + " is negative");
  }
  const Eigen::MatrixXd qt = q.q.transpose();
  auto s = detail::symmetric_from_pairs(static_cast<std::size_t>(qt.cols()), [&](std::size_t i, std::size_t j) {
    const auto a = qt.col(static_cast<Eigen::Index>(i));
    const auto b = qt.col(static_cast<Eigen::Index>(j));
    double d2 = 0.0;
    for (Eigen::Index l = 0; l < qt.rows(); ++l) {
      const double d = a(l) - b(l);
      d2 += omega[static_cast<std::size_t>(l)] * d * d;
    }
    return std::exp(-d2);
  });
  return {std::move(s), SimilarityKind::phenotypic, "ed", {}};
}

/// S_ij = exp(-(1/L) d' Gamma d), Gamma the inverse of the uncentered second
/// moment (1/n) sum_i q_i q_i'. Rejects moment matrices whose condition number
/// exceeds `max_condition`.
inline SimilarityMatrix correlation_adjusted_similarity(const QuantileMatrix& q, double max_condition = 1e12) {
  const auto n = static_cast<double>(q.q.rows());
  const auto l = q.q.cols();
  const Eigen::MatrixXd moment = (q.q.transpose() * q.q) / n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(moment, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (eig.info() != Eigen::Success || !(lo > 0.0) || hi / lo > max_condition) {
    throw InputError("phenotype quantile moment matrix is singular or ill-conditioned (condition " +
                     std::to_string(lo > 0.0 ? hi / lo : INFINITY) +
                     "); use the unadjusted ED phenotype kernel instead");
  }
  Eigen::MatrixXd gamma = moment.ldlt().solve(Eigen::MatrixXd::Identity(l, l));
  gamma = 0.5 * (gamma + gamma.transpose()).eval();
  const Eigen::MatrixXd qt = q.q.transpose();
  const double inv_l = 1.0 / static_cast<double>(l);
  auto s = detail::symmetric_from_pairs(static_cast<std::size_t>(qt.cols()), [&](std::size_t i, std::size_t j) {
    const Eigen::VectorXd d = qt.col(static_cast<Eigen::Index>(i)) - qt.col(static_cast<Eigen::Index>(j));
    return std::exp(-inv_l * d.dot(gamma * d));
  });
  return {std::move(s), SimilarityKind::phenotypic, "ed-corr", {}};
}

/// (I - J) S (I - J) with J = 11'/n, evaluated through row and grand means.
inline CenteredSimilarityMatrix center_similarity(const Eigen::MatrixXd& s, std::string source = {}) {
  const auto n = s.rows();
  if (n != s.cols()) throw InputError("similarity matrix must be square");
  const Eigen::VectorXd row = s.rowwise().mean();
  const Eigen::VectorXd col = s.colwise().mean().transpose();
  const double grand = row.mean();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = s(i, j) - row(i) - col(j) + grand;
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return {std::move(c), std::move(source), {}};
}

inline CenteredSimilarityMatrix center_similarity(const SimilarityMatrix& s) {
  auto c = center_similarity(s.values, s.provenance);
  c.subject_ids = s.subject_ids;
  return c;
}

/// P S P with P = I - X (X'X)^{-1} X'. X must have full column rank and fewer
/// columns than rows.
inline CenteredSimilarityMatrix covariate_adjusted_center(const Eigen::MatrixXd& s, const CovariateMatrix& cov,
                                                          std::string source = {}) {
  const auto n = s.rows();
  const auto& x = cov.x;
  if (x.rows() != n) throw InputError("covariate matrix rows do not match similarity matrix size");
  if (x.cols() < 1 || x.cols() >= n) throw InputError("covariate matrix needs 1 <= p < n columns");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw InputError("covariate matrix is rank deficient");
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, x.cols());
  // P S P = S - H S - S H + H S H with H = Q Q'
  const Eigen::MatrixXd qts = q.transpose() * s;        // p x n
  const Eigen::MatrixXd hs = q * qts;                   // H S
  const Eigen::MatrixXd qtsq = qts * q;                 // p x p
  const Eigen::MatrixXd hsh = q * qtsq * q.transpose();  // H S H
  Eigen::MatrixXd c = s - hs - hs.transpose() + hsh;
  c = (0.5 * (c + c.transpose())).eval();
  return {std::move(c), std::move(source), {}};
}

inline CenteredSimilarityMatrix covariate_adjusted_center(const SimilarityMatrix& s, const CovariateMatrix& cov) {
  auto c = covariate_adjusted_center(s.values, cov, s.provenance);
  c.subject_ids = s.subject_ids;
  return c;
}

}  // namespace gsu
