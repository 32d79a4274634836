#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/qfdist/mixture.hpp"
#include "gsu/simkernel/similarity.hpp"

namespace gsu {

inline constexpr double kDefaultSpectrumTol = 1e-10;
inline constexpr std::size_t kDefaultMixtureCap = 10'000;

/// Eigenvalues of one diagonal-zeroed centered matrix after truncation.
struct SideSpectrum {
  std::vector<double> retained;  // descending by magnitude
  std::size_t truncated = 0;
  double dropped_mass = 0.0;     // sum of |truncated|
  double dropped_sum = 0.0;      // signed sum of truncated
};

struct EigenSpectrum {
  SideSpectrum genetic;
  SideSpectrum phenotypic;
  double truncation_tol = kDefaultSpectrumTol;
};

namespace detail {

inline SideSpectrum side_spectrum(const Eigen::MatrixXd& centered, double tol, const char* label) {
  Eigen::MatrixXd zeroed = centered;
  zeroed.diagonal().setZero();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(zeroed, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    const double asym = (zeroed - zeroed.transpose()).cwiseAbs().maxCoeff();
    throw NumericalError(std::string("eigendecomposition of the ") + label + " matrix did not converge (n=" +
                         std::to_string(zeroed.rows()) + ", frobenius=" + std::to_string(zeroed.norm()) +
                         ", max asymmetry=" + std::to_string(asym) + ")");
  }
  std::vector<double> ev(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  std::stable_sort(ev.begin(), ev.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  SideSpectrum out;
  const double cut = ev.empty() ? 0.0 : tol * std::abs(ev.front());
  for (double e : ev) {
    if (e != 0.0 && std::abs(e) >= cut) {
      out.retained.push_back(e);
    } else {
      ++out.truncated;
      out.dropped_mass += std::abs(e);
      out.dropped_sum += e;
    }
  }
  return out;
}

}  // namespace detail

/// Eigenvalues of K~0 and S~0 (centered matrices with zeroed diagonals).
/// Values with |e| < tol * max|e| are truncated and their mass reported.
inline EigenSpectrum eigen_spectrum(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s,
                                    double tol = kDefaultSpectrumTol) {
  if (k.values.rows() != s.values.rows()) throw InputError("centered similarity matrices differ in size");
  EigenSpectrum sp;
  sp.truncation_tol = tol;
  sp.genetic = detail::side_spectrum(k.values, tol, "genetic");
  sp.phenotypic = detail::side_spectrum(s.values, tol, "phenotypic");
  return sp;
}

struct NullMixture {
  ChiSquareMixture mixture;
  std::size_t grid_size = 0;      // retained genetic x phenotypic products
  std::size_t dropped_count = 0;  // removed by the tolerance or the cap
  double dropped_mass = 0.0;      // sum of |removed weights|
};

/// Weights (eta_t / n)(lambda_s / n) over the retained cross-product grid of a
/// centered chi-square mixture for n*U. Products below tol * max|w| are
/// dropped and at most `cap` of the largest are kept.
inline NullMixture null_mixture(const EigenSpectrum& spec, std::size_t n, double tol = kDefaultSpectrumTol,
                                std::size_t cap = kDefaultMixtureCap) {
  const auto& eta = spec.genetic.retained;
  const auto& lambda = spec.phenotypic.retained;
  if (eta.empty() || lambda.empty()) {
    throw NumericalError(std::string("degenerate kernel: the ") + (eta.empty() ? "genetic" : "phenotypic") +
                         " spectrum is empty");
  }
  const auto nd = static_cast<double>(n);
  std::vector<double> w;
  w.reserve(eta.size() * lambda.size());
  for (double e : eta) {
    for (double l : lambda) w.push_back((e / nd) * (l / nd));
  }
  NullMixture out;
  out.grid_size = w.size();
  std::vector<std::size_t> idx(w.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(w[a]);
    const double mb = std::abs(w[b]);
    return ma != mb ? ma > mb : a < b;
  };
  std::size_t keep = std::min(cap, idx.size());
  if (keep < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), by_magnitude);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), by_magnitude);
  const double cut = tol * std::abs(w[idx.front()]);
  std::vector<double> kept;
  kept.reserve(keep);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double v = w[idx[k]];
    if (k < keep && v != 0.0 && std::abs(v) >= cut) {
      kept.push_back(v);
    } else {
      ++out.dropped_count;
      out.dropped_mass += std::abs(v);
    }
  }
  if (kept.empty()) throw NumericalError("degenerate kernel: every mixture weight is zero");
  out.mixture = ChiSquareMixture(std::move(kept), true);
  return out;
}

}  // namespace gsu
