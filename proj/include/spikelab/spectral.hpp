#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spikelab/model.hpp"

namespace spikelab {

/// Aspect ratio c = p/n together with the population bulk measure H.
struct StieltjesContext {
  double c = 0.0;
  BulkMeasure bulk;

  StieltjesContext(double c_ratio, BulkMeasure h);
};

enum class PhaseRegime { distant, right_threshold, left_threshold };

std::string to_string(PhaseRegime r);

/// Outcome of the phase-transition map for one population spike.
/// right_threshold: the sample eigenvalue sticks to a right bulk edge (the
/// critical point lies above alpha); left_threshold: to a left edge.
struct PhaseValue {
  double alpha = 0.0;
  double phi = 0.0;
  double phi_prime = 0.0;
  double rho = 0.0;
  PhaseRegime regime = PhaseRegime::distant;
  std::optional<double> critical_point;
};

/// alpha * (1 + c * sum_i w_i t_i / (alpha - t_i)).
double phi(double alpha, const StieltjesContext& ctx);

/// phi with finite-sample ratio c_n and bulk H_n.
double phi_n(double alpha, double c_n, const BulkMeasure& bulk_n);

/// 1 - c * sum_i w_i t_i^2 / (alpha - t_i)^2.
double phi_prime(double alpha, const StieltjesContext& ctx);

double phi_second(double alpha, const StieltjesContext& ctx);

/// Almost-sure limit of the sample eigenvalues attached to spike alpha.
PhaseValue rho(double alpha, const StieltjesContext& ctx);

/// Open alpha-intervals on which phi' > 0 (phi increasing). Infinite ends are
/// reported as +-infinity. Ascending.
struct AlphaInterval {
  double lo;
  double hi;
};
std::vector<AlphaInterval> distant_intervals(const StieltjesContext& ctx);

/// Edges of the support of the companion law F (the images of the critical
/// points of phi), ascending.
std::vector<double> support_edges(const StieltjesContext& ctx);

/// Companion Stieltjes transform m(lambda) = int (x - lambda)^{-1} dF(x) for
/// real lambda outside the support. Solves
///   lambda = -1/m + c * sum_i w_i t_i / (1 + t_i m)
/// on the branch continuous with m -> 0- as lambda -> +inf.
double mp_m_underline(double lambda, const StieltjesContext& ctx);

/// int (lambda - x)^{-2} dF(x) = m'(lambda).
double m_underline_2(double lambda, const StieltjesContext& ctx);

/// Inverse of phi on its distant branches: -1 / m(lambda).
double alpha_from_lambda(double lambda, const StieltjesContext& ctx);

/// Bulk-weighted transform -(1/lambda) * sum_i w_i t_i / (1 + t_i m(lambda)),
/// the limit of (1/p) tr(D2 (B - lambda)^{-1}) for the bulk sample matrix B.
double m_tilde(double lambda, const StieltjesContext& ctx);

/// lambda + 1/m - c * sum_i w_i t_i / (1 + t_i m).
double fixed_point_residual(double m, double lambda, const StieltjesContext& ctx);

namespace detail {
/// General-bulk route (phi inversion); bypasses the single-atom closed form.
double m_underline_by_inversion(double lambda, const StieltjesContext& ctx);
/// Quadratic closed form; requires a point-mass bulk.
double m_underline_point_mass(double lambda, const StieltjesContext& ctx);
}  // namespace detail

}  // namespace spikelab
