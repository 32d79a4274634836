#include <cmath>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <gtest/gtest.h>

#include "gsu/core/rng.hpp"
#include "gsu/simkernel/similarity.hpp"

namespace gsu {
namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::MatrixXd random_dosage(std::size_t n, std::size_t m, std::uint64_t seed) {
  auto eng = make_engine(seed, 0);
  boost::random::uniform_01<double> u;
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j) d(i, j) = (u(eng) < 0.3) + (u(eng) < 0.3);
  return d;
}

Eigen::MatrixXd random_symmetric(std::size_t n, std::uint64_t seed) {
  auto eng = make_engine(seed, 1);
  boost::random::normal_distribution<double> z;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = z(eng);
  return (a + a.transpose()) / 2.0;
}

TEST(IbsSimilarity, HandValues) {
  EXPECT_DOUBLE_EQ(ibs_similarity(rows({{1, 2, 0}, {1, 2, 0}})).values(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(ibs_similarity(rows({{0}, {2}})).values(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(ibs_similarity(rows({{0, 2}, {2, 2}})).values(0, 1), 0.5);
}

TEST(IbsSimilarity, MissingGenotypeRejected) {
  GenotypeMatrix g(2, 1, {0, GenotypeMatrix::kMissing});
  EXPECT_THROW(ibs_similarity(g), InputError);
}

TEST(WibsSimilarity, EqualWeightsReduceToIbs) {
  const auto d = random_dosage(30, 8, 3);
  const auto a = ibs_similarity(d).values;
  const auto b = wibs_similarity(d, WeightVector(std::vector<double>(8, 2.7))).values;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(WibsSimilarity, IdenticalRowsGiveOne) {
  const auto d = rows({{2, 0, 1}, {2, 0, 1}});
  EXPECT_DOUBLE_EQ(wibs_similarity(d, WeightVector({0.1, 5.0, 2.0})).values(0, 1), 1.0);
}

TEST(WibsSimilarity, WeightedHandValue) {
  const auto w = maf_weights({{0.5, 0.1}});
  EXPECT_NEAR(wibs_similarity(rows({{1, 0}, {1, 1}}), w).values(0, 1), 0.6875, 1e-12);
}

TEST(WibsSimilarity, DimensionMismatch) {
  EXPECT_THROW(wibs_similarity(rows({{1, 0}, {1, 1}}), WeightVector({1.0})), InputError);
}

TEST(EdGenotypeSimilarity, HandValues) {
  EXPECT_DOUBLE_EQ(ed_genotype_similarity(rows({{1, 2}, {1, 2}}), WeightVector({1.0, 3.0})).values(0, 1), 1.0);
  EXPECT_NEAR(ed_genotype_similarity(rows({{0}, {2}}), WeightVector({1.0})).values(0, 1), std::exp(-4.0), 1e-15);
  EXPECT_NEAR(std::exp(-4.0), 0.018316, 1e-6);
  const auto s = ed_genotype_similarity(random_dosage(10, 4, 5), WeightVector({0.0, 0.0, 0.0, 0.0})).values;
  EXPECT_TRUE(s.isOnes());
}

QuantileMatrix quantiles(const Eigen::MatrixXd& q) { return {q, {}}; }

TEST(EdPhenotypeSimilarity, HandValues) {
  const double one[] = {1.0};
  EXPECT_DOUBLE_EQ(ed_phenotype_similarity(quantiles(rows({{0.3}, {0.3}})), one).values(0, 1), 1.0);
  EXPECT_NEAR(ed_phenotype_similarity(quantiles(rows({{0.5}, {-0.5}})), one).values(0, 1), 0.367879, 1e-6);
  const double zeros[] = {0.0, 0.0};
  EXPECT_TRUE(ed_phenotype_similarity(quantiles(rows({{1, 2}, {-1, 0}, {3, 3}})), zeros).values.isOnes());
  const double negative[] = {-1.0};
  EXPECT_THROW(ed_phenotype_similarity(quantiles(rows({{1}, {2}})), negative), InputError);
}

Eigen::MatrixXd normal_matrix(std::size_t n, std::size_t l, std::uint64_t seed) {
  auto eng = make_engine(seed, 2);
  boost::random::normal_distribution<double> z;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(eng);
  return m;
}

TEST(CorrelationAdjustedSimilarity, IdenticalRowsGiveOne) {
  auto q = normal_matrix(20, 2, 7);
  q.row(1) = q.row(0);
  EXPECT_DOUBLE_EQ(correlation_adjusted_similarity(quantiles(q)).values(0, 1), 1.0);
}

TEST(CorrelationAdjustedSimilarity, ScalarCaseIsEdWithScaledWeight) {
  const auto q = normal_matrix(40, 1, 8);
  const double gamma = 40.0 / q.squaredNorm();
  const double omega[] = {gamma};
  const auto a = correlation_adjusted_similarity(quantiles(q)).values;
  const auto b = ed_phenotype_similarity(quantiles(q), omega).values;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CorrelationAdjustedSimilarity, UncorrelatedColumnsMatchEd) {
  const auto q = normal_matrix(500, 3, 9);
  const double omega[] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto a = correlation_adjusted_similarity(quantiles(q)).values;
  const auto b = ed_phenotype_similarity(quantiles(q), omega).values;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 0.05);
}

TEST(CorrelationAdjustedSimilarity, SingularMomentRejected) {
  auto q = normal_matrix(30, 2, 10);
  q.col(1) = q.col(0);
  try {
    correlation_adjusted_similarity(quantiles(q));
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("unadjusted"), std::string::npos);
  }
}

TEST(CenterSimilarity, ConstantMatrixVanishes) {
  const auto c = center_similarity(Eigen::MatrixXd::Constant(5, 5, 0.7)).values;
  EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CenterSimilarity, TwoByTwoByHand) {
  const auto c = center_similarity(rows({{1, 0.5}, {0.5, 1}})).values;
  EXPECT_NEAR(c(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(c(0, 1), -0.25, 1e-15);
  EXPECT_NEAR(c(1, 0), -0.25, 1e-15);
  EXPECT_NEAR(c(1, 1), 0.25, 1e-15);
}

TEST(CenterSimilarity, MatchesProjectorProduct) {
  const auto s = random_symmetric(25, 11);
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(25, 25) - Eigen::MatrixXd::Constant(25, 25, 1.0 / 25);
  const Eigen::MatrixXd expect = p * s * p;
  const auto c = center_similarity(s).values;
  EXPECT_LT((c - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(c.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(c.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CovariateAdjustedCenter, InterceptOnlyEqualsCentering) {
  const auto s = random_symmetric(40, 12);
  const auto a = covariate_adjusted_center(s, CovariateMatrix::intercept_only(40)).values;
  const auto b = center_similarity(s).values;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CovariateAdjustedCenter, ConstantMatrixVanishesAndCovariatesProjectedOut) {
  const auto x = CovariateMatrix::with_intercept(normal_matrix(30, 2, 13));
  EXPECT_LT(covariate_adjusted_center(Eigen::MatrixXd::Constant(30, 30, 2.0), x).values.cwiseAbs().maxCoeff(), 1e-12);
  const auto c = covariate_adjusted_center(random_symmetric(30, 14), x).values;
  EXPECT_LT((x.x.transpose() * c).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CovariateAdjustedCenter, DegenerateDesignsRejected) {
  const auto s = random_symmetric(6, 15);
  EXPECT_THROW(covariate_adjusted_center(s, CovariateMatrix{Eigen::MatrixXd::Identity(6, 6)}), InputError);
  Eigen::MatrixXd x(6, 2);
  x.col(0).setOnes();
  x.col(1).setConstant(3.0);
  EXPECT_THROW(covariate_adjusted_center(s, CovariateMatrix{x}), InputError);
}

}  // namespace
}  // namespace gsu
