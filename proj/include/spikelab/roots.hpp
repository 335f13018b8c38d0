#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "spikelab/error.hpp"

namespace spikelab::roots {

struct Options {
  double residual_tol = 1e-12;  // relative to max(1, |scale|)
  int max_iter = 200;
};

/// Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.
/// Newton steps are accepted only while they stay inside the current bracket;
/// otherwise the bracket is bisected.
template <typename F, typename DF>
double bracketed_newton(F&& f, DF&& df, double lo, double hi, double scale = 1.0,
                        const Options& opt = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  const double tol = opt.residual_tol * std::max(1.0, std::abs(scale));
  if (std::abs(flo) <= tol) return lo;
  if (std::abs(fhi) <= tol) return hi;
  if ((flo > 0) == (fhi > 0)) {
    std::ostringstream msg;
    msg << "root not bracketed on [" << lo << ", " << hi << "]: f(lo)=" << flo
        << ", f(hi)=" << fhi;
    throw NumericalError(msg.str());
  }
  const bool rising = fhi > 0;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < opt.max_iter; ++it) {
    const double fx = f(x);
    if (!std::isfinite(fx)) {
      throw NumericalError("non-finite residual during root search");
    }
    if (std::abs(fx) <= tol) return x;
    if ((fx > 0) == rising) {
      hi = x;
    } else {
      lo = x;
    }
    // bracket collapsed to adjacent doubles
    if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) {
      return x;
    }
    const double d = df(x);
    double next = (d != 0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  std::ostringstream msg;
  msg << "root search did not converge in " << opt.max_iter << " iterations; bracket [" << lo
      << ", " << hi << "]";
  throw NumericalError(msg.str());
}

/// Plain bisection for a monotone sign change; used where the derivative is
/// not available in closed form.
template <typename F>
double bisect(F&& f, double lo, double hi, int max_iter = 200) {
  const bool rising = f(hi) > 0;
  for (int it = 0; it < max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    if ((f(mid) > 0) == rising) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace spikelab::roots
