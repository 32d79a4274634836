#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gsu/core/error.hpp"
#include "gsu/core/parallel.hpp"
#include "gsu/core/rng.hpp"
#include "gsu/gsucore/statistic.hpp"
#include "gsu/qfdist/tail.hpp"

namespace gsu {

/// One-sided asymptotic p-value P(nU > n U_obs) under the null mixture.
inline TailResult asymptotic_pvalue(const GsuStatistic& stat, const ChiSquareMixture& mixture,
                                    const QfAccuracy& acc = {}) {
  return tail_probability(mixture, stat.scaled, acc);
}

/// Exact mean and variance of nU over relabelings of the subjects, i.e. the
/// conditional null moments given the two kernels (Mantel's formulas on the
/// diagonal-zeroed matrices).
struct NullMoments {
  double mean = 0.0;
  double variance = 0.0;
};

inline NullMoments exact_null_moments(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s) {
  detail::check_pair(k, s);
  const auto n = static_cast<double>(k.size());
  struct Sums {
    double s1, s2, s3;  // sum a_ij, sum a_ij^2, sum_i (sum_j a_ij)^2, over i != j
  };
  const auto sums = [](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd a = m;
    a.diagonal().setZero();
    return Sums{a.sum(), a.squaredNorm(), a.rowwise().sum().squaredNorm()};
  };
  const auto a = sums(k.values);
  const auto b = sums(s.values);
  const double n2 = n * (n - 1.0);
  const double mean = a.s1 * b.s1 / n2;
  double var = 2.0 * a.s2 * b.s2 / n2;
  if (n > 2.0) var += 4.0 * (a.s3 - a.s2) * (b.s3 - b.s2) / (n2 * (n - 2.0));
  if (n > 3.0) {
    var += (a.s1 * a.s1 - 4.0 * a.s3 + 2.0 * a.s2) * (b.s1 * b.s1 - 4.0 * b.s3 + 2.0 * b.s2) /
           (n2 * (n - 2.0) * (n - 3.0));
  }
  var -= mean * mean;
  // the pair sum carries the factor n / (n(n-1)) = 1/(n-1) to become nU
  const double scale = 1.0 / (n - 1.0);
  return {mean * scale, std::max(var, 0.0) * scale * scale};
}

struct PermutationResult {
  double p = 1.0;
  std::size_t permutations = 0;
  std::size_t exceed = 0;  // permutations with U_perm >= U_obs
};

inline constexpr std::size_t kMinPermutations = 100;

/// Uniformly random permutation of 0..n-1 drawn from replicate `b` of `seed`.
inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed, std::uint64_t b) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto engine = make_engine(seed, b);
  // Fisher-Yates with an explicit bounded draw so the sequence does not
  // depend on the standard library's shuffle
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = Engine::max() - (Engine::max() % bound);
    std::uint64_t r;
    do {
      r = engine();
    } while (r >= limit);
    std::swap(perm[i], perm[static_cast<std::size_t>(r % bound)]);
  }
  return perm;
}

/// Add-one permutation p-value (1 + #{U_perm >= U_obs}) / (B + 1), relabeling
/// the subjects of S~ (rows and columns together).
inline PermutationResult permutation_pvalue(const CenteredSimilarityMatrix& k, const CenteredSimilarityMatrix& s,
                                            std::size_t permutations, std::uint64_t seed, unsigned threads = 1) {
  detail::check_pair(k, s);
  if (permutations < kMinPermutations) {
    throw InputError("permutation p-value needs at least " + std::to_string(kMinPermutations) + " permutations");
  }
  const double observed = detail::off_diagonal_product_sum(k.values, s.values, {});
  std::vector<char> hit(permutations, 0);
  parallel_for(permutations, threads, [&](std::size_t b) {
    const auto perm = seeded_permutation(k.size(), seed, b);
    hit[b] = detail::off_diagonal_product_sum(k.values, s.values, perm) >= observed ? 1 : 0;
  });
  PermutationResult out;
  out.permutations = permutations;
  out.exceed = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  out.p = (1.0 + static_cast<double>(out.exceed)) / (static_cast<double>(permutations) + 1.0);
  return out;
}

}  // namespace gsu
