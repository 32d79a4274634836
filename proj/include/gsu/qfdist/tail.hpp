#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <boost/math/tools/roots.hpp>

#include "gsu/core/error.hpp"
#include "gsu/qfdist/davies.hpp"
#include "gsu/qfdist/liu.hpp"
#include "gsu/qfdist/mixture.hpp"
#include "gsu/qfdist/montecarlo.hpp"

namespace gsu {

enum class TailEngine { davies, liu, montecarlo, degenerate };

inline const char* to_string(TailEngine e) {
  switch (e) {
    case TailEngine::davies: return "davies";
    case TailEngine::liu: return "liu";
    case TailEngine::montecarlo: return "montecarlo";
    case TailEngine::degenerate: return "degenerate";
  }
  return "unknown";
}

inline constexpr double kPValueFloor = 1e-16;

struct TailResult {
  double p = 1.0;
  TailEngine engine = TailEngine::davies;
  bool clamped = false;                   // raised to kPValueFloor
  std::optional<DaviesTail> davies;       // always attempted
  std::optional<double> liu;              // set when Davies was rejected
  std::optional<double> error_bound;      // Davies bound when Davies was used
};

/// P(Q > x) with engine preference Davies, then Liu, then Monte Carlo.
/// Davies is rejected when it reports a failure or an error bound above
/// acc.davies_max_error; Liu is rejected only on a non-finite result.
inline TailResult tail_probability(const ChiSquareMixture& m, double x, const QfAccuracy& acc = {}) {
  TailResult out;
  out.davies = davies_survival(m, x, acc);
  if (out.davies->ok() && out.davies->error_bound <= acc.davies_max_error) {
    out.p = out.davies->p;
    out.engine = TailEngine::davies;
    out.error_bound = out.davies->error_bound;
  } else {
    const double liu = liu_survival(m, x);
    out.liu = liu;
    if (std::isfinite(liu)) {
      out.p = liu;
      out.engine = TailEngine::liu;
    } else {
      const double mc = mc_survival(m, x, acc.mc_draws, acc.mc_seed);
      if (!std::isfinite(mc)) throw NumericalError("every tail-probability engine failed");
      out.p = mc;
      out.engine = TailEngine::montecarlo;
    }
  }
  if (out.p < kPValueFloor) {
    out.p = kPValueFloor;
    out.clamped = true;
  }
  out.p = std::min(out.p, 1.0);
  return out;
}

/// q with P(Q > q) = 1 - prob, by bracketing and TOMS 748 on the survival
/// function. Guarantees |P(Q > q) - (1 - prob)| <= 1e-6 or throws.
inline double mixture_quantile(const ChiSquareMixture& m, double prob, const QfAccuracy& acc = {}) {
  if (!(prob > 0.0 && prob < 1.0)) throw InputError("quantile probability must lie in (0, 1)");
  const double target = 1.0 - prob;
  auto f = [&](double x) { return tail_probability(m, x, acc).p - target; };

  const double sd = std::sqrt(m.variance());
  double lo = m.mean() - sd;
  double hi = m.mean() + sd;
  double flo = f(lo);
  double fhi = f(hi);
  int expansions = 0;
  constexpr int kMaxExpansions = 64;
  while (flo < 0.0) {  // survival at lo still below target: move left
    if (++expansions > kMaxExpansions) throw NumericalError("mixture quantile: bracketing failed");
    hi = lo;
    fhi = flo;
    lo -= sd * std::ldexp(1.0, expansions);
    flo = f(lo);
  }
  while (fhi > 0.0) {
    if (++expansions > kMaxExpansions) throw NumericalError("mixture quantile: bracketing failed");
    lo = hi;
    flo = fhi;
    hi += sd * std::ldexp(1.0, expansions);
    fhi = f(hi);
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  std::uintmax_t iterations = 200;
  const auto tol = [sd](double a, double b) { return std::abs(b - a) <= 1e-10 * std::max(sd, std::abs(a)); };
  const auto root = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iterations);
  const double q = 0.5 * (root.first + root.second);
  if (std::abs(f(q)) > 1e-6) throw NumericalError("mixture quantile did not converge to 1e-6");
  return q;
}

}  // namespace gsu
