#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "gsu/core/error.hpp"
#include "gsu/core/parallel.hpp"
#include "gsu/core/rng.hpp"
#include "gsu/qfdist/mixture.hpp"

namespace gsu {

inline constexpr std::size_t kMinMonteCarloDraws = 10'000;

namespace detail {
inline constexpr std::size_t kMonteCarloChunk = 1u << 14;
}

/// Empirical P(Q > x) at every point of `xs` from one set of `draws`
/// realizations. Draws are split into fixed chunks with their own substream,
/// so the result depends on the seed only, not on `threads`.
inline std::vector<double> mc_survival_grid(const ChiSquareMixture& m, std::span<const double> xs, std::size_t draws,
                                            std::uint64_t seed, unsigned threads = 1) {
  if (draws < kMinMonteCarloDraws) {
    throw InputError("Monte Carlo survival needs at least " + std::to_string(kMinMonteCarloDraws) + " draws");
  }
  // compare uncentered sums against sorted thresholds
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> thresholds;
  for (auto k : order) thresholds.push_back(m.uncentered_point(xs[k]));

  const std::size_t chunks = (draws + detail::kMonteCarloChunk - 1) / detail::kMonteCarloChunk;
  // counts[c][k]: draws in chunk c exceeding the k-th smallest threshold
  std::vector<std::vector<std::size_t>> counts(chunks, std::vector<std::size_t>(xs.size(), 0));
  const auto& w = m.weights();
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto engine = make_engine(seed, c);
    boost::random::normal_distribution<double> normal;
    const std::size_t begin = c * detail::kMonteCarloChunk;
    const std::size_t end = std::min(draws, begin + detail::kMonteCarloChunk);
    std::vector<std::size_t> below(thresholds.size() + 1, 0);
    for (std::size_t d = begin; d < end; ++d) {
      double q = 0.0;
      for (double wi : w) {
        const double z = normal(engine);
        q += wi * z * z;
      }
      // number of thresholds strictly below q
      const auto idx = static_cast<std::size_t>(std::lower_bound(thresholds.begin(), thresholds.end(), q) -
                                                thresholds.begin());
      ++below[idx];
    }
    // a draw exceeds threshold k iff idx > k
    std::size_t running = 0;
    for (std::size_t k = thresholds.size(); k-- > 0;) {
      running += below[k + 1];
      counts[c][k] = running;
    }
  });

  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    std::size_t total = 0;
    for (const auto& cc : counts) total += cc[k];
    out[order[k]] = static_cast<double>(total) / static_cast<double>(draws);
  }
  return out;
}

inline double mc_survival(const ChiSquareMixture& m, double x, std::size_t draws, std::uint64_t seed,
                          unsigned threads = 1) {
  const double xs[] = {x};
  return mc_survival_grid(m, xs, draws, seed, threads).front();
}

}  // namespace gsu
