#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsu/core/error.hpp"
#include "gsu/gsucore/pvalue.hpp"
#include "gsu/gsucore/spectrum.hpp"
#include "gsu/gsucore/statistic.hpp"
#include "gsu/qfdist/tail.hpp"
#include "gsu/simkernel/genotype.hpp"
#include "gsu/simkernel/phenotype.hpp"
#include "gsu/simkernel/similarity.hpp"

namespace gsu {

enum class GeneticKernel { ibs, wibs, ed };
enum class PhenotypeKernel { ed, ed_corr };
enum class CovariateMode { projection, residualize };
// asymptotic: the chi-square mixture as is (mean 0). exact_moments: the same
// mixture shifted and rescaled to the exact conditional null mean and variance
// of nU, which removes the O(1/n) bias of sample centering.
enum class NullCalibration { asymptotic, exact_moments };

inline const char* to_string(GeneticKernel k) {
  switch (k) {
    case GeneticKernel::ibs: return "ibs";
    case GeneticKernel::wibs: return "wibs";
    case GeneticKernel::ed: return "ed";
  }
  return "unknown";
}
inline const char* to_string(PhenotypeKernel k) { return k == PhenotypeKernel::ed ? "ed" : "ed-corr"; }
inline const char* to_string(CovariateMode m) { return m == CovariateMode::projection ? "projection" : "residualize"; }
inline const char* to_string(NullCalibration c) {
  return c == NullCalibration::asymptotic ? "asymptotic" : "exact-moments";
}

struct GsuOptions {
  GeneticKernel genetic_kernel = GeneticKernel::wibs;
  PhenotypeKernel phenotype_kernel = PhenotypeKernel::ed;
  MissingPolicy missing = MissingPolicy::impute_mean;
  /// Design matrix including the intercept column; rows follow the subjects of G and Y.
  std::optional<CovariateMatrix> covariates;
  CovariateMode covariate_mode = CovariateMode::projection;
  double spectrum_tol = kDefaultSpectrumTol;
  std::size_t mixture_cap = kDefaultMixtureCap;
  QfAccuracy accuracy;
  NullCalibration null_calibration = NullCalibration::exact_moments;
  std::size_t permutations = 0;  // 0 disables the permutation p-value
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool evaluate_all_engines = false;  // also record the Liu p-value when Davies was used
};

/// Centered kernels and bookkeeping shared by the test and moment estimation.
struct CenteredKernels {
  CenteredSimilarityMatrix genetic;
  CenteredSimilarityMatrix phenotypic;
  std::size_t n = 0;
  std::size_t variants_used = 0;
  std::size_t monomorphic_dropped = 0;
  std::size_t subjects_dropped = 0;
  std::size_t imputed_cells = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline Eigen::MatrixXd residualize(const Eigen::MatrixXd& y, const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw InputError("covariate matrix is rank deficient");
  return y - x * qr.solve(y);
}

}  // namespace detail

inline CenteredKernels build_centered_kernels(const GenotypeMatrix& g, const PhenotypeTable& y,
                                              const GsuOptions& opt) {
  if (g.subjects() != y.subjects()) {
    throw InputError("genotype and phenotype subject counts differ (" + std::to_string(g.subjects()) + " vs " +
                     std::to_string(y.subjects()) + ")");
  }
  if (g.subject_ids() != y.subject_ids()) throw InputError("genotype and phenotype subjects are not aligned");
  if (opt.covariates && static_cast<std::size_t>(opt.covariates->x.rows()) != g.subjects()) {
    throw InputError("covariate rows do not match the subject count");
  }

  CenteredKernels out;
  const auto prep = prepare_genotypes(g, opt.missing);
  out.variants_used = prep.kept_variants.size();
  out.monomorphic_dropped = prep.monomorphic_dropped;
  out.imputed_cells = prep.imputed_cells;
  out.subjects_dropped = g.subjects() - prep.kept_subjects.size();
  if (out.monomorphic_dropped > 0) {
    out.warnings.push_back("dropped " + std::to_string(out.monomorphic_dropped) + " monomorphic variant(s)");
  }
  if (out.subjects_dropped > 0) {
    out.warnings.push_back("dropped " + std::to_string(out.subjects_dropped) + " subject(s) with missing genotypes");
  }

  PhenotypeTable pheno = out.subjects_dropped > 0 ? y.select_subjects(prep.kept_subjects) : y;
  std::optional<CovariateMatrix> cov;
  if (opt.covariates) {
    if (out.subjects_dropped > 0) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(prep.kept_subjects.size()), opt.covariates->x.cols());
      for (std::size_t k = 0; k < prep.kept_subjects.size(); ++k) {
        x.row(static_cast<Eigen::Index>(k)) = opt.covariates->x.row(static_cast<Eigen::Index>(prep.kept_subjects[k]));
      }
      cov = CovariateMatrix{std::move(x)};
    } else {
      cov = opt.covariates;
    }
  }
  out.n = pheno.subjects();
  std::vector<std::string> ids = pheno.subject_ids();

  SimilarityMatrix k;
  switch (opt.genetic_kernel) {
    case GeneticKernel::ibs: k = ibs_similarity(prep.dosage); break;
    case GeneticKernel::wibs: k = wibs_similarity(prep.dosage, maf_weights(prep.maf)); break;
    case GeneticKernel::ed: k = ed_genotype_similarity(prep.dosage, maf_weights(prep.maf)); break;
  }

  if (cov && opt.covariate_mode == CovariateMode::residualize) {
    pheno = pheno.with_values(detail::residualize(pheno.values(), cov->x));
  }
  const auto q = rank_quantile_transform(pheno);
  for (auto c : q.constant_columns) {
    out.warnings.push_back("phenotype '" + pheno.names()[c] + "' is constant and contributes nothing");
  }
  SimilarityMatrix s = opt.phenotype_kernel == PhenotypeKernel::ed
                           ? ed_phenotype_similarity(q, pheno.weights())
                           : correlation_adjusted_similarity(q);

  if (cov && opt.covariate_mode == CovariateMode::projection) {
    out.genetic = covariate_adjusted_center(k, *cov);
    out.phenotypic = covariate_adjusted_center(s, *cov);
  } else {
    out.genetic = center_similarity(k);
    out.phenotypic = center_similarity(s);
  }
  out.genetic.subject_ids = ids;
  out.phenotypic.subject_ids = std::move(ids);
  return out;
}

struct TestDiagnostics {
  EigenSpectrum spectrum;
  std::size_t mixture_size = 0;
  std::size_t mixture_grid = 0;
  std::size_t mixture_dropped = 0;
  double mixture_dropped_mass = 0.0;
  std::optional<DaviesTail> davies;
  std::optional<double> liu;
  bool clamped = false;
  NullCalibration calibration = NullCalibration::exact_moments;
  double null_mean = 0.0;         // exact E(nU) under the null
  double null_variance = 0.0;     // exact Var(nU) under the null
  double mixture_variance = 0.0;
  double evaluated_at = 0.0;      // point passed to the mixture survival function
};

struct TestResult {
  GsuStatistic statistic;
  std::optional<double> p_asymptotic;
  TailEngine p_engine = TailEngine::davies;
  std::optional<double> p_permutation;
  std::size_t permutations_used = 0;
  TestDiagnostics diagnostics;
  std::size_t variants_used = 0;
  std::size_t monomorphic_dropped = 0;
  std::size_t subjects_dropped = 0;
  std::size_t imputed_cells = 0;
  std::vector<std::string> warnings;
};

/// Asymptotic (and optionally permutation) test on already centered kernels.
inline TestResult gsu_test_centered(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s,
                                    const GsuOptions& opt) {
  TestResult r;
  r.statistic = compute_u(k, s);
  r.diagnostics.spectrum = eigen_spectrum(k, s, opt.spectrum_tol);
  const auto& sp = r.diagnostics.spectrum;
  if (sp.genetic.retained.empty() || sp.phenotypic.retained.empty()) {
    // a zero kernel makes n*U identically zero
    r.p_asymptotic = 1.0;
    r.p_engine = TailEngine::degenerate;
    r.warnings.push_back(std::string("degenerate ") + (sp.genetic.retained.empty() ? "genetic" : "phenotypic") +
                         " kernel: U is identically 0, p set to 1");
  } else {
    const auto nm = null_mixture(sp, r.statistic.n, opt.spectrum_tol, opt.mixture_cap);
    r.diagnostics.mixture_size = nm.mixture.size();
    r.diagnostics.mixture_grid = nm.grid_size;
    r.diagnostics.mixture_dropped = nm.dropped_count;
    r.diagnostics.mixture_dropped_mass = nm.dropped_mass;
    auto& d = r.diagnostics;
    d.calibration = opt.null_calibration;
    d.mixture_variance = nm.mixture.variance();
    const auto mom = exact_null_moments(k, s);
    d.null_mean = mom.mean;
    d.null_variance = mom.variance;
    d.evaluated_at = r.statistic.scaled;
    if (opt.null_calibration == NullCalibration::exact_moments) {
      // P(c Q > nU - E0) with c^2 = Var0(nU) / Var(Q)
      d.evaluated_at -= mom.mean;
      if (mom.variance > 0.0 && d.mixture_variance > 0.0) d.evaluated_at /= std::sqrt(mom.variance / d.mixture_variance);
    }
    const auto tail = tail_probability(nm.mixture, d.evaluated_at, opt.accuracy);
    r.p_asymptotic = tail.p;
    r.p_engine = tail.engine;
    r.diagnostics.davies = tail.davies;
    r.diagnostics.liu = tail.liu;
    r.diagnostics.clamped = tail.clamped;
    if (opt.evaluate_all_engines && !r.diagnostics.liu) r.diagnostics.liu = liu_survival(nm.mixture, d.evaluated_at);
  }
  if (opt.permutations > 0) {
    const auto perm = permutation_pvalue(k, s, opt.permutations, opt.seed, opt.threads);
    r.p_permutation = perm.p;
    r.permutations_used = perm.permutations;
  }
  return r;
}

/// Builds kernels per options, centers them (covariate-projected when
/// covariates are supplied), and computes U with its p-values.
inline TestResult gsu_test(const GenotypeMatrix& g, const PhenotypeTable& y, const GsuOptions& opt = {}) {
  auto kernels = build_centered_kernels(g, y, opt);
  auto r = gsu_test_centered(kernels.genetic, kernels.phenotypic, opt);
  r.variants_used = kernels.variants_used;
  r.monomorphic_dropped = kernels.monomorphic_dropped;
  r.subjects_dropped = kernels.subjects_dropped;
  r.imputed_cells = kernels.imputed_cells;
  r.warnings.insert(r.warnings.begin(), kernels.warnings.begin(), kernels.warnings.end());
  return r;
}

}  // namespace gsu
