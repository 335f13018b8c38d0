#include "spikelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spikelab/error.hpp"
#include "spikelab/roots.hpp"

namespace spikelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEdgeMargin = 1e-8;

void check_not_atom(double alpha, const StieltjesContext& ctx) {
  if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
  for (const auto& a : ctx.bulk.atoms()) {
    if (std::abs(alpha - a.t) <= 1e-12 * a.t) {
      std::ostringstream msg;
      msg << "alpha = " << alpha << " coincides with bulk atom " << a.t;
      throw DomainError(msg.str());
    }
  }
}

double raw_phi(double a, const StieltjesContext& ctx) {
  return a * (1.0 + ctx.c * ctx.bulk.integrate([a](double t) { return t / (a - t); }));
}

double raw_phi_prime(double a, const StieltjesContext& ctx) {
  return 1.0 - ctx.c * ctx.bulk.integrate([a](double t) {
           const double r = t / (a - t);
           return r * r;
         });
}

double raw_phi_second(double a, const StieltjesContext& ctx) {
  return 2.0 * ctx.c * ctx.bulk.integrate([a](double t) {
           const double d = a - t;
           return t * t / (d * d * d);
         });
}

// Point just inside an atom boundary where phi' is already negative.
double near_atom(double t, double toward, const StieltjesContext& ctx) {
  double delta = 0.5 * std::abs(toward - t);
  const double dir = toward > t ? 1.0 : -1.0;
  for (int i = 0; i < 200; ++i) {
    const double x = t + dir * delta;
    if (x != t && raw_phi_prime(x, ctx) < 0) return x;
    delta *= 0.5;
  }
  throw NumericalError("could not isolate bulk atom");
}

double root_phi_prime(double lo, double hi, const StieltjesContext& ctx) {
  return roots::bracketed_newton([&](double a) { return raw_phi_prime(a, ctx); },
                                 [&](double a) { return raw_phi_second(a, ctx); }, lo, hi);
}

// Critical points of phi (zeros of phi'), plus the classification data for
// every interval of the atom complement.
struct Layout {
  double bottom = 0.0;  // root in (-inf, t_1)
  double top = 0.0;     // root in (t_K, inf)
  struct Gap {
    double lo_atom, hi_atom;
    double peak;  // maximiser of phi' on the gap
    bool has_roots;
    double r1, r2;
  };
  std::vector<Gap> gaps;
};

Layout layout(const StieltjesContext& ctx) {
  const auto& atoms = ctx.bulk.atoms();
  Layout out;
  const double t1 = atoms.front().t;
  const double tk = atoms.back().t;

  // bottom: phi' decreases from 1 to -inf
  {
    const double hi = near_atom(t1, 0.0, ctx);
    double lo = std::min(0.0, hi - t1);
    double step = t1;
    while (raw_phi_prime(lo, ctx) <= 0) {
      lo -= step;
      step *= 2;
      if (!std::isfinite(lo)) throw NumericalError("bottom critical point search diverged");
    }
    out.bottom = root_phi_prime(lo, hi, ctx);
  }
  // top: phi' increases from -inf to 1
  {
    const double lo = near_atom(tk, 2 * tk, ctx);
    double hi = 2 * tk;
    double step = tk;
    while (raw_phi_prime(hi, ctx) <= 0) {
      hi += step;
      step *= 2;
      if (!std::isfinite(hi)) throw NumericalError("top critical point search diverged");
    }
    out.top = root_phi_prime(lo, hi, ctx);
  }
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    Layout::Gap g{};
    g.lo_atom = atoms[i].t;
    g.hi_atom = atoms[i + 1].t;
    // phi'' runs from +inf to -inf across the gap
    const double span = g.hi_atom - g.lo_atom;
    double lo = g.lo_atom + 0.25 * span;
    double hi = g.hi_atom - 0.25 * span;
    for (int k = 0; k < 200 && raw_phi_second(lo, ctx) <= 0; ++k) lo = g.lo_atom + 0.5 * (lo - g.lo_atom);
    for (int k = 0; k < 200 && raw_phi_second(hi, ctx) >= 0; ++k) hi = g.hi_atom - 0.5 * (g.hi_atom - hi);
    g.peak = roots::bisect([&](double a) { return -raw_phi_second(a, ctx); }, lo, hi);
    g.has_roots = raw_phi_prime(g.peak, ctx) > 0;
    if (g.has_roots) {
      g.r1 = root_phi_prime(near_atom(g.lo_atom, g.peak, ctx), g.peak, ctx);
      g.r2 = root_phi_prime(g.peak, near_atom(g.hi_atom, g.peak, ctx), ctx);
    }
    out.gaps.push_back(g);
  }
  return out;
}

bool near_edge(double lambda, double edge) {
  return std::abs(lambda - edge) <= kEdgeMargin * std::max(1.0, std::abs(edge));
}

std::string describe(double lambda) {
  std::ostringstream msg;
  msg << "lambda = " << lambda << " lies inside or on the edge of the limiting support";
  return msg.str();
}

}  // namespace

StieltjesContext::StieltjesContext(double c_ratio, BulkMeasure h) : c(c_ratio), bulk(std::move(h)) {
  if (!(c >= 0) || !std::isfinite(c)) throw InvalidArgument("aspect ratio c must be finite and >= 0");
  if (bulk.empty()) throw InvalidArgument("bulk measure is empty");
}

std::string to_string(PhaseRegime r) {
  switch (r) {
    case PhaseRegime::distant:
      return "distant";
    case PhaseRegime::right_threshold:
      return "right-threshold";
    case PhaseRegime::left_threshold:
      return "left-threshold";
  }
  return "distant";
}

double phi(double alpha, const StieltjesContext& ctx) {
  check_not_atom(alpha, ctx);
  return raw_phi(alpha, ctx);
}

double phi_n(double alpha, double c_n, const BulkMeasure& bulk_n) {
  return phi(alpha, StieltjesContext(c_n, bulk_n));
}

double phi_prime(double alpha, const StieltjesContext& ctx) {
  check_not_atom(alpha, ctx);
  return raw_phi_prime(alpha, ctx);
}

double phi_second(double alpha, const StieltjesContext& ctx) {
  check_not_atom(alpha, ctx);
  return raw_phi_second(alpha, ctx);
}

PhaseValue rho(double alpha, const StieltjesContext& ctx) {
  if (!(alpha > 0)) throw InvalidArgument("spike value must be > 0");
  check_not_atom(alpha, ctx);
  PhaseValue out;
  out.alpha = alpha;
  out.phi = raw_phi(alpha, ctx);
  out.phi_prime = raw_phi_prime(alpha, ctx);
  if (out.phi_prime > 0) {
    out.rho = out.phi;
    out.regime = PhaseRegime::distant;
    return out;
  }
  const auto lay = layout(ctx);
  const auto& atoms = ctx.bulk.atoms();
  double crit = 0.0;
  if (alpha > atoms.back().t) {
    crit = lay.top;
    out.regime = PhaseRegime::right_threshold;
  } else if (alpha < atoms.front().t) {
    crit = lay.bottom;
    out.regime = PhaseRegime::left_threshold;
  } else {
    const auto it = std::find_if(lay.gaps.begin(), lay.gaps.end(), [&](const Layout::Gap& g) {
      return alpha > g.lo_atom && alpha < g.hi_atom;
    });
    if (it == lay.gaps.end()) throw NumericalError("spike not located between bulk atoms");
    if (!it->has_roots) {
      std::ostringstream msg;
      msg << "alpha = " << alpha << " lies in a gap (" << it->lo_atom << ", " << it->hi_atom
          << ") of the bulk that carries no critical point";
      throw DomainError(msg.str());
    }
    if (alpha < it->peak) {
      crit = it->r1;
      out.regime = PhaseRegime::right_threshold;
    } else {
      crit = it->r2;
      out.regime = PhaseRegime::left_threshold;
    }
  }
  out.critical_point = crit;
  out.rho = raw_phi(crit, ctx);
  return out;
}

std::vector<AlphaInterval> distant_intervals(const StieltjesContext& ctx) {
  const auto& atoms = ctx.bulk.atoms();
  std::vector<AlphaInterval> out;
  if (ctx.c == 0) {
    out.push_back({-kInf, atoms.front().t});
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) out.push_back({atoms[i].t, atoms[i + 1].t});
    out.push_back({atoms.back().t, kInf});
    return out;
  }
  const auto lay = layout(ctx);
  out.push_back({-kInf, lay.bottom});
  for (const auto& g : lay.gaps) {
    if (g.has_roots) out.push_back({g.r1, g.r2});
  }
  out.push_back({lay.top, kInf});
  return out;
}

std::vector<double> support_edges(const StieltjesContext& ctx) {
  if (ctx.c == 0) {
    std::vector<double> out;
    for (const auto& a : ctx.bulk.atoms()) out.push_back(a.t);
    return out;
  }
  std::vector<double> out;
  for (const auto& iv : distant_intervals(ctx)) {
    if (std::isfinite(iv.lo)) out.push_back(raw_phi(iv.lo, ctx));
    if (std::isfinite(iv.hi)) out.push_back(raw_phi(iv.hi, ctx));
  }
  std::sort(out.begin(), out.end());
  return out;
}

double fixed_point_residual(double m, double lambda, const StieltjesContext& ctx) {
  return lambda + 1.0 / m - ctx.c * ctx.bulk.integrate([m](double t) { return t / (1.0 + t * m); });
}

namespace detail {

double m_underline_by_inversion(double lambda, const StieltjesContext& ctx) {
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  if (ctx.c == 0) {
    if (lambda == 0) throw DomainError(describe(lambda));
    for (const auto& a : ctx.bulk.atoms()) {
      if (near_edge(lambda, a.t)) throw DomainError(describe(lambda));
    }
    return -1.0 / lambda;
  }
  const auto pieces = distant_intervals(ctx);
  for (const auto& iv : pieces) {
    const double lam_lo = std::isfinite(iv.lo) ? raw_phi(iv.lo, ctx) : -kInf;
    const double lam_hi = std::isfinite(iv.hi) ? raw_phi(iv.hi, ctx) : kInf;
    if (std::isfinite(lam_lo) && near_edge(lambda, lam_lo)) throw DomainError(describe(lambda));
    if (std::isfinite(lam_hi) && near_edge(lambda, lam_hi)) throw DomainError(describe(lambda));
    if (!(lambda > lam_lo && lambda < lam_hi)) continue;

    double lo = iv.lo;
    double hi = iv.hi;
    const double unit = std::max(1.0, ctx.bulk.max_point());
    if (!std::isfinite(hi)) {
      double step = unit;
      hi = lo + step;
      while (raw_phi(hi, ctx) <= lambda) {
        step *= 2;
        hi = lo + step;
      }
    }
    if (!std::isfinite(lo)) {
      double step = unit;
      lo = hi - step;
      while (raw_phi(lo, ctx) >= lambda) {
        step *= 2;
        lo = hi - step;
      }
    }
    const double root = roots::bracketed_newton(
        [&](double a) { return raw_phi(a, ctx) - lambda; },
        [&](double a) { return raw_phi_prime(a, ctx); }, lo, hi, lambda);
    // the residual test is absolute for |lambda| < 1; polish so small
    // lambda still gets full relative accuracy
    double alpha = root;
    for (int k = 0; k < 3; ++k) {
      const double r = raw_phi(alpha, ctx) - lambda;
      const double next = alpha - r / raw_phi_prime(alpha, ctx);
      if (!(next > lo && next < hi)) break;
      if (std::abs(raw_phi(next, ctx) - lambda) >= std::abs(r)) break;
      alpha = next;
    }
    if (alpha == 0) throw DomainError(describe(lambda));
    return -1.0 / alpha;
  }
  throw DomainError(describe(lambda));
}

double m_underline_point_mass(double lambda, const StieltjesContext& ctx) {
  if (!ctx.bulk.is_point_mass()) throw InvalidArgument("closed form needs a point-mass bulk");
  if (!std::isfinite(lambda)) throw InvalidArgument("lambda must be finite");
  const double t = ctx.bulk.min_point();
  const double c = ctx.c;
  if (c == 0) return m_underline_by_inversion(lambda, ctx);
  const double lo_edge = (1 - std::sqrt(c)) * (1 - std::sqrt(c)) * t;
  const double hi_edge = (1 + std::sqrt(c)) * (1 + std::sqrt(c)) * t;
  if (near_edge(lambda, lo_edge) || near_edge(lambda, hi_edge)) throw DomainError(describe(lambda));

  // lambda t m^2 + (lambda + t - c t) m + 1 = 0
  const double qa = lambda * t;
  const double qb = lambda + t - c * t;
  std::vector<double> cands;
  if (qa == 0) {
    if (qb != 0) cands.push_back(-1.0 / qb);
  } else {
    const double disc = qb * qb - 4 * qa;
    if (disc < 0) throw DomainError(describe(lambda));
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (qb + std::copysign(sq, qb));
    if (q != 0) {
      cands.push_back(q / qa);
      cands.push_back(1.0 / q);
    }
  }
  std::vector<double> valid;
  for (double m : cands) {
    if (m == 0 || !std::isfinite(m)) continue;
    // Newton polish on the quadratic
    for (int i = 0; i < 3; ++i) {
      const double f = (qa * m + qb) * m + 1;
      const double d = 2 * qa * m + qb;
      if (d == 0) break;
      m -= f / d;
    }
    const double alpha = -1.0 / m;
    if (std::abs(alpha - t) <= 1e-12 * t) continue;
    if (raw_phi_prime(alpha, ctx) > 0) valid.push_back(m);
  }
  if (valid.empty()) throw DomainError(describe(lambda));
  if (valid.size() > 1 && std::abs(valid[0] - valid[1]) > 1e-12 * std::abs(valid[0])) {
    std::ostringstream msg;
    msg << "ambiguous branch at lambda = " << lambda << ": m = " << valid[0] << " or " << valid[1];
    throw NumericalError(msg.str());
  }
  return valid.front();
}

}  // namespace detail

double mp_m_underline(double lambda, const StieltjesContext& ctx) {
  if (ctx.bulk.is_point_mass()) return detail::m_underline_point_mass(lambda, ctx);
  return detail::m_underline_by_inversion(lambda, ctx);
}

double m_underline_2(double lambda, const StieltjesContext& ctx) {
  const double m = mp_m_underline(lambda, ctx);
  const double denom = 1.0 / (m * m) - ctx.c * ctx.bulk.integrate([m](double t) {
                         const double r = t / (1.0 + t * m);
                         return r * r;
                       });
  if (!(denom > 0)) throw DomainError(describe(lambda));
  return 1.0 / denom;
}

double alpha_from_lambda(double lambda, const StieltjesContext& ctx) {
  return -1.0 / mp_m_underline(lambda, ctx);
}

double m_tilde(double lambda, const StieltjesContext& ctx) {
  if (lambda == 0) throw DomainError("m_tilde is undefined at lambda = 0");
  const double m = mp_m_underline(lambda, ctx);
  return -(1.0 / lambda) * ctx.bulk.integrate([m](double t) { return t / (1.0 + t * m); });
}

}  // namespace spikelab
