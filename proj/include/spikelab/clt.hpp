#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "spikelab/error.hpp"
#include "spikelab/model.hpp"
#include "spikelab/rng.hpp"
#include "spikelab/spectral.hpp"
#include "spikelab/types.hpp"

namespace spikelab {

/// delocalized: spike eigenvectors spread out, limit block is GOE.
/// diagonal: spike eigenvectors are coordinate vectors, the fourth moment of
/// the entries enters the diagonal variance.
enum class CltRegime { delocalized, diagonal };

std::string to_string(CltRegime r);
CltRegime clt_regime_from_string(const std::string& name);

struct CltParams {
  double alpha = 0.0;
  double c = 0.0;
  double phi = 0.0;
  double phi_prime = 0.0;
  double m_under = 0.0;
  double m_under2 = 0.0;
  double m_tilde = 0.0;
  double kappa_s = 0.0;
  double theta = 0.0;
  double nu = 0.0;
  double beta_x = 0.0;
  int multiplicity = 1;
  CltRegime regime = CltRegime::delocalized;
};

/// Bundle for one distant spike. beta is only used in the diagonal regime.
CltParams clt_params(double alpha, const StieltjesContext& ctx, int multiplicity = 1,
                     CltRegime regime = CltRegime::delocalized, double beta = 0.0);

/// 1 + phi alpha m2(phi) + alpha m(phi).
double kappa_s(double alpha, const StieltjesContext& ctx);

/// alpha^2 m2(phi).
double theta(double alpha, const StieltjesContext& ctx);

/// alpha^2 / (phi (1 + c m_tilde(phi)))^2.
double nu(double alpha, const StieltjesContext& ctx);

/// sum_t u_t^4 E x^4 - 3.
double beta_x(double fourth_moment, const VectorXd& u);

/// Variance of a diagonal (diagonal = true) or off-diagonal entry of the
/// limiting block.
double omega_variance(const CltParams& params, bool diagonal);

/// Limiting variance of sqrt(n)(l/phi - 1) for a simple spike.
double sigma_single(const CltParams& params);

/// Eigenvalues of -(1/kappa_s) W for one draw of the symmetric Gaussian block
/// W, descending.
VectorXd sample_limit_block(Philox& rng, const CltParams& params);

struct OmegaSample {
  MatrixXd matrix;          // M x M, symmetrized
  double asymmetry = 0.0;   // max |W - W^T| / max |W| before symmetrizing
};

/// (1/sqrt n) [ tr(R) D1 - D1^{1/2} U1^T X R X^T U1 D1^{1/2} ],
/// R = (lambda I_n - (1/n) X^T G X)^{-1}, G = U2 D2 U2^T.
/// The n x n resolvent is never formed: with Z = D2^{1/2} U2^T X and
/// Z Z^T / n = Q L Q^T,
///   tr R = (n - (p - M)) / lambda + sum_q 1 / (lambda - L_q),
///   Xi R Xi^T = (1/lambda) [Xi Xi^T + (1/n) (Xi Z^T Q) (lambda - L)^{-1} (Xi Z^T Q)^T].
template <typename Derived>
OmegaSample omega_statistic(double lambda, const Eigen::MatrixBase<Derived>& x,
                            const PopulationModel& model) {
  using Scalar = typename Derived::Scalar;
  using Mat = Matrix<Scalar>;
  using Vec = Vector<Scalar>;
  const int p = model.p();
  const int m = model.spike_count();
  const Eigen::Index n = x.cols();
  if (x.rows() != p) throw InvalidArgument("data rows must equal the model dimension");
  if (n < 1) throw InvalidArgument("need at least one observation");
  if (m < 1) throw InvalidArgument("model has no spikes");
  const Scalar nn = static_cast<Scalar>(n);
  const Scalar lam = static_cast<Scalar>(lambda);

  const Mat u1 = model.u1().template cast<Scalar>();
  const Mat u2 = model.u2().template cast<Scalar>();
  const Vec d1 = model.d1.template cast<Scalar>();
  const Vec d2 = model.d2.template cast<Scalar>();

  const Mat z = d2.cwiseSqrt().asDiagonal() * (u2.transpose() * x);
  const Mat xi = u1.transpose() * x;
  Mat b = Mat::Zero(z.rows(), z.rows());
  b.template selfadjointView<Eigen::Lower>().rankUpdate(z, Scalar(1) / nn);
  Eigen::SelfAdjointEigenSolver<Mat> solver(b);
  if (solver.info() != Eigen::Success) throw NumericalError("bulk eigensolve failed");
  const Vec& l = solver.eigenvalues();
  const Scalar guard = Scalar(1e-12) * std::max(Scalar(1), std::abs(lam));
  Vec inv(l.size());
  for (Eigen::Index q = 0; q < l.size(); ++q) {
    const Scalar gap = lam - l(q);
    if (std::abs(gap) <= guard) throw DomainError("lambda is an eigenvalue of the bulk sample matrix; resolvent is singular");
    inv(q) = Scalar(1) / gap;
  }
  const Eigen::Index bulk_dim = z.rows();
  if (n != bulk_dim && std::abs(lam) <= guard) {
    throw DomainError("lambda = 0 is an eigenvalue of the bulk sample matrix; resolvent is singular");
  }
  const Scalar tr_r = static_cast<Scalar>(n - bulk_dim) / lam + inv.sum();

  const Mat w = (xi * z.transpose()) * solver.eigenvectors();
  const Mat quad = (xi * xi.transpose() + (w * inv.asDiagonal() * w.transpose()) / nn) / lam;

  const Vec root = d1.cwiseSqrt();
  const Mat raw = (tr_r * Mat(d1.asDiagonal()) - root.asDiagonal() * quad * root.asDiagonal()) / std::sqrt(nn);

  OmegaSample out;
  const Scalar scale = raw.cwiseAbs().maxCoeff();
  out.asymmetry = scale > 0 ? static_cast<double>((raw - raw.transpose()).cwiseAbs().maxCoeff() / scale) : 0.0;
  out.matrix = (Scalar(0.5) * (raw + raw.transpose())).template cast<double>();
  return out;
}

/// Which H_n is used in the centering phi_n(alpha_k).
/// full_spectrum: c' = (p - m_k)/n with the empirical law of the other p - m_k
///   population eigenvalues (other spikes included);
/// bulk: c_n = p/n with the bulk law only.
enum class Centering { full_spectrum, bulk };

std::string to_string(Centering c);
Centering centering_from_string(const std::string& name);

/// phi_n(alpha_k) used to center the statistics of spike group k.
double centering_phi(const PopulationModel& model, std::size_t group, double c_n,
                     Centering centering = Centering::full_spectrum);

struct GammaSample {
  std::vector<VectorXd> groups;   // sqrt(n) (l_j / phi_k - 1), j in J_k
  std::vector<double> centers;    // phi_k used per group
};

GammaSample gamma_from_eigs(const VectorXd& eigs, const PopulationModel& model, double c_n,
                            Centering centering = Centering::full_spectrum);

}  // namespace spikelab
