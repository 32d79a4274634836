#pragma once

// Characteristic-function inversion for P(sum_j w_j X_j < c), X_j ~ chi2_1,
// following Davies (1980, Applied Statistics algorithm AS 155) restricted to
// central 1-df terms without a normal component.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "gsu/qfdist/mixture.hpp"

namespace gsu {

enum class DaviesStatus {
  ok,
  accuracy_not_reached,   // integration terms exceed the limit
  roundoff,               // round-off error possibly significant
  parameters_not_found,   // could not locate integration parameters
};

inline const char* to_string(DaviesStatus s) {
  switch (s) {
    case DaviesStatus::ok: return "ok";
    case DaviesStatus::accuracy_not_reached: return "accuracy_not_reached";
    case DaviesStatus::roundoff: return "roundoff";
    case DaviesStatus::parameters_not_found: return "parameters_not_found";
  }
  return "unknown";
}

struct DaviesTail {
  double p = 1.0;            // P(Q > x), clamped to [0, 1]
  double error_bound = 0.0;  // absolute bound on |p - truth| when status is ok
  DaviesStatus status = DaviesStatus::ok;
  std::size_t terms = 0;     // total integration terms used
  [[nodiscard]] bool ok() const noexcept { return status == DaviesStatus::ok; }
};

namespace detail {

class DaviesIntegrator {
 public:
  DaviesIntegrator(const std::vector<double>& lambda, std::size_t limit)
      : lb_(lambda), lim_(static_cast<long>(std::min<std::size_t>(limit, 1'000'000'000))) {
    r_ = lb_.size();
  }

  struct Outcome {
    double cdf = -1.0;
    DaviesStatus status = DaviesStatus::ok;
    double terms = 0.0;
  };

  Outcome run(double c, double acc) {
    Outcome out;
    c_ = c;
    count_ = 0;
    aborted_ = false;
    intl_ = 0.0;
    ersm_ = 0.0;
    ndtsrt_ = true;
    fail_ = false;
    double xlim = static_cast<double>(lim_);
    double acc1 = acc;

    sigsq_ = 0.0;
    double sd = 0.0;
    lmax_ = 0.0;
    lmin_ = 0.0;
    mean_ = 0.0;
    for (double lj : lb_) {
      sd += lj * lj * 2.0;
      mean_ += lj;
      if (lmax_ < lj) {
        lmax_ = lj;
      } else if (lmin_ > lj) {
        lmin_ = lj;
      }
    }
    if (sd == 0.0) {
      out.cdf = c > 0.0 ? 1.0 : 0.0;
      return out;
    }
    sd = std::sqrt(sd);
    const double almx = lmax_ < -lmin_ ? -lmin_ : lmax_;

    double utx = 16.0 / sd;
    double up = 4.5 / sd;
    double un = -up;
    findu(utx, 0.5 * acc1);
    if (aborted_) return abort(out);
    // does a convergence factor help
    if (c_ != 0.0 && almx > 0.07 * sd) {
      const double tausq = 0.25 * acc1 / cfe(c_);
      if (fail_) {
        fail_ = false;
      } else if (truncation(utx, tausq) < 0.2 * acc1) {
        sigsq_ += tausq;
        findu(utx, 0.25 * acc1);
      }
    }
    if (aborted_) return abort(out);
    acc1 *= 0.5;

    for (;;) {
      // range of the distribution; quit if c lies outside it
      const double d1 = ctff(acc1, up) - c_;
      if (aborted_) return abort(out);
      if (d1 < 0.0) {
        out.cdf = 1.0;
        out.terms = terms_;
        return out;
      }
      const double d2 = c_ - ctff(acc1, un);
      if (aborted_) return abort(out);
      if (d2 < 0.0) {
        out.cdf = 0.0;
        out.terms = terms_;
        return out;
      }
      const double intv = 2.0 * std::numbers::pi / std::max(d1, d2);
      const double xnt = utx / intv;
      const double xntm = 3.0 / std::sqrt(acc1);
      if (xnt > xntm * 1.5) {
        // auxiliary integration
        if (xntm > xlim) {
          out.status = DaviesStatus::accuracy_not_reached;
          out.terms = terms_;
          return out;
        }
        const auto ntm = static_cast<long>(std::floor(xntm + 0.5));
        const double intv1 = utx / static_cast<double>(ntm);
        const double x = 2.0 * std::numbers::pi / intv1;
        if (x > std::abs(c_)) {
          const double tausq = 0.33 * acc1 / (1.1 * (cfe(c_ - x) + cfe(c_ + x)));
          if (aborted_) return abort(out);
          if (!fail_) {
            acc1 *= 0.67;
            integrate(ntm, intv1, tausq, false);
            xlim -= xntm;
            sigsq_ += tausq;
            terms_ += static_cast<double>(ntm + 1);
            findu(utx, 0.25 * acc1);
            acc1 *= 0.75;
            if (aborted_) return abort(out);
            continue;
          }
        }
      }
      // main integration
      if (xnt > xlim) {
        out.status = DaviesStatus::accuracy_not_reached;
        out.terms = terms_;
        return out;
      }
      const auto nt = static_cast<long>(std::floor(xnt + 0.5));
      integrate(nt, intv, 0.0, true);
      terms_ += static_cast<double>(nt + 1);
      out.cdf = 0.5 - intl_;
      out.terms = terms_;
      // round-off test, allowing for radix 8 or 16 machines
      const double u = ersm_;
      const double xr = u + acc / 10.0;
      for (const double rat : {1.0, 2.0, 4.0, 8.0}) {
        if (rat * xr == rat * u) out.status = DaviesStatus::roundoff;
      }
      return out;
    }
  }

 private:
  static double exp1(double x) { return x < -50.0 ? 0.0 : std::exp(x); }

  /// log(1 + x) when `first`, else log(1 + x) - x.
  static double log1(double x, bool first) {
    if (std::abs(x) > 0.1) return first ? std::log1p(x) : std::log1p(x) - x;
    if (first) return std::log1p(x);
    double y = x / (2.0 + x);
    double term = 2.0 * y * y * y;
    double k = 3.0;
    double s = -x * y;
    y *= y;
    for (double s1 = s + term / k; s1 != s; s1 = s + term / k) {
      k += 2.0;
      term *= y;
      s = s1;
    }
    return s;
  }

  Outcome abort(Outcome out) const {
    out.status = DaviesStatus::parameters_not_found;
    out.terms = terms_;
    return out;
  }

  void counter() {
    if (++count_ > lim_) aborted_ = true;
  }

  void order() {
    th_.resize(r_);
    for (std::size_t j = 0; j < r_; ++j) th_[j] = j;
    std::stable_sort(th_.begin(), th_.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(lb_[a]) > std::abs(lb_[b]);
    });
    ndtsrt_ = false;
  }

  /// Bound on the tail probability via the mgf; cutoff returned in cx.
  double errbd(double u, double& cx) {
    counter();
    double xconst = u * sigsq_;
    double sum1 = u * xconst;
    u *= 2.0;
    for (std::size_t j = r_; j-- > 0;) {
      const double lj = lb_[j];
      const double x = u * lj;
      const double y = 1.0 - x;
      xconst += lj / y;
      sum1 += x * x / y + log1(-x, false);
    }
    cx = xconst;
    return exp1(-0.5 * sum1);
  }

  /// Cutoff such that P(Q > cutoff) < accx when upn > 0, P(Q < cutoff) < accx otherwise.
  double ctff(double accx, double& upn) {
    double u2 = upn;
    double u1 = 0.0;
    double c1 = mean_;
    double c2 = 0.0;
    const double rb = 2.0 * (u2 > 0.0 ? lmax_ : lmin_);
    for (double u = u2 / (1.0 + u2 * rb); errbd(u, c2) > accx; u = u2 / (1.0 + u2 * rb)) {
      if (aborted_) return c2;
      u1 = u2;
      c1 = c2;
      u2 *= 2.0;
    }
    for (double u = (c1 - mean_) / (c2 - mean_); u < 0.9; u = (c1 - mean_) / (c2 - mean_)) {
      if (aborted_) return c2;
      u = (u1 + u2) / 2.0;
      double xconst = 0.0;
      if (errbd(u / (1.0 + u * rb), xconst) > accx) {
        u1 = u;
        c1 = xconst;
      } else {
        u2 = u;
        c2 = xconst;
      }
    }
    upn = u2;
    return c2;
  }

  /// Bound on the integration error from truncating at u.
  double truncation(double u, double tausq) {
    counter();
    double prod2 = 0.0;
    double prod3 = 0.0;
    int s = 0;
    const double sum2 = (sigsq_ + tausq) * u * u;
    double prod1 = 2.0 * sum2;
    u *= 2.0;
    for (double lj : lb_) {
      const double x = (u * lj) * (u * lj);
      if (x > 1.0) {
        prod2 += std::log(x);
        prod3 += log1(x, true);
        ++s;
      } else {
        prod1 += log1(x, true);
      }
    }
    prod2 += prod1;
    prod3 += prod1;
    const double x = exp1(-0.25 * prod2) / std::numbers::pi;
    const double y = exp1(-0.25 * prod3) / std::numbers::pi;
    double err1 = s == 0 ? 1.0 : x * 2.0 / s;
    double err2 = prod3 > 1.0 ? 2.5 * y : 1.0;
    if (err2 < err1) err1 = err2;
    const double half = 0.5 * sum2;
    err2 = half <= y ? 1.0 : y / half;
    return err1 < err2 ? err1 : err2;
  }

  /// u such that truncation(u) < accx and truncation(u / 1.2) > accx.
  void findu(double& utx, double accx) {
    static constexpr double divis[] = {2.0, 1.4, 1.2, 1.1};
    double ut = utx;
    double u = ut / 4.0;
    if (truncation(u, 0.0) > accx) {
      for (u = ut; truncation(u, 0.0) > accx; u = ut) {
        if (aborted_) return;
        ut *= 4.0;
      }
    } else {
      ut = u;
      for (u /= 4.0; truncation(u, 0.0) <= accx; u /= 4.0) {
        if (aborted_) return;
        ut = u;
      }
    }
    for (double d : divis) {
      u = ut / d;
      if (truncation(u, 0.0) <= accx) ut = u;
    }
    utx = ut;
  }

  /// Integration with nterm terms at step interv; if !mainx the integrand is
  /// multiplied by 1 - exp(-tausq u^2 / 2).
  void integrate(long nterm, double interv, double tausq, bool mainx) {
    const double inpi = interv / std::numbers::pi;
    for (long k = nterm; k >= 0; --k) {
      const double u = (static_cast<double>(k) + 0.5) * interv;
      double sum1 = -2.0 * u * c_;
      double sum2 = std::abs(sum1);
      double sum3 = -0.5 * sigsq_ * u * u;
      for (std::size_t j = r_; j-- > 0;) {
        const double x = 2.0 * lb_[j] * u;
        sum3 -= 0.25 * std::log1p(x * x);
        const double z = std::atan(x);
        sum1 += z;
        sum2 += std::abs(z);
      }
      double x = inpi * exp1(sum3) / u;
      if (!mainx) x *= 1.0 - exp1(-0.5 * tausq * u * u);
      intl_ += std::sin(0.5 * sum1) * x;
      ersm_ += 0.5 * sum2 * x;
    }
  }

  /// Coefficient of tausq in the error when a convergence factor is used at x.
  double cfe(double x) {
    counter();
    if (ndtsrt_) order();
    double axl = std::abs(x);
    const double sxl = x > 0.0 ? 1.0 : -1.0;
    double sum1 = 0.0;
    static const double log28 = 0.0866;  // log(2) / 8
    for (std::size_t j = r_; j-- > 0;) {
      const std::size_t t = th_[j];
      if (lb_[t] * sxl > 0.0) {
        const double lj = std::abs(lb_[t]);
        const double axl1 = axl - lj;
        const double axl2 = lj / log28;
        if (axl1 > axl2) {
          axl = axl1;
        } else {
          if (axl > axl2) axl = axl2;
          sum1 = (axl - axl1) / lj;
          sum1 += static_cast<double>(j);  // one degree of freedom for each larger term
          break;
        }
      }
    }
    if (sum1 > 100.0) {
      fail_ = true;
      return 1.0;
    }
    return std::pow(2.0, sum1 / 4.0) / (std::numbers::pi * axl * axl);
  }

  const std::vector<double>& lb_;
  std::size_t r_ = 0;
  long lim_;
  long count_ = 0;
  bool aborted_ = false;
  std::vector<std::size_t> th_;
  double sigsq_ = 0.0, lmax_ = 0.0, lmin_ = 0.0, mean_ = 0.0, c_ = 0.0;
  double intl_ = 0.0, ersm_ = 0.0;
  double terms_ = 0.0;
  bool ndtsrt_ = true;
  bool fail_ = false;
};

}  // namespace detail

/// P(Q > x) for the mixture by characteristic-function inversion.
inline DaviesTail davies_survival(const ChiSquareMixture& m, double x, const QfAccuracy& acc = {}) {
  if (!(acc.target_abs_error > 0.0)) throw InputError("target_abs_error must be positive");
  detail::DaviesIntegrator integrator(m.weights(), acc.integration_terms_limit);
  const auto r = integrator.run(m.uncentered_point(x), acc.target_abs_error);
  DaviesTail out;
  out.status = r.status;
  out.terms = static_cast<std::size_t>(r.terms);
  out.p = std::clamp(1.0 - r.cdf, 0.0, 1.0);
  out.error_bound = r.status == DaviesStatus::ok ? acc.target_abs_error : INFINITY;
  return out;
}

}  // namespace gsu
