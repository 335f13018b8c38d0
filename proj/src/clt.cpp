#include "spikelab/clt.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace spikelab {

namespace {

PhaseValue require_distant(double alpha, const StieltjesContext& ctx) {
  const PhaseValue pv = rho(alpha, ctx);
  if (pv.regime != PhaseRegime::distant) {
    std::ostringstream msg;
    msg << "spike " << alpha << " is not distant (phi' = " << pv.phi_prime << ")";
    throw DomainError(msg.str());
  }
  return pv;
}

}  // namespace

std::string to_string(CltRegime r) {
  return r == CltRegime::diagonal ? "diagonal" : "delocalized";
}

CltRegime clt_regime_from_string(const std::string& name) {
  if (name == "delocalized") return CltRegime::delocalized;
  if (name == "diagonal") return CltRegime::diagonal;
  throw InvalidArgument("unknown regime '" + name + "' (expected delocalized or diagonal)");
}

CltParams clt_params(double alpha, const StieltjesContext& ctx, int multiplicity, CltRegime regime,
                     double beta) {
  if (multiplicity < 1) throw InvalidArgument("multiplicity must be >= 1");
  const PhaseValue pv = require_distant(alpha, ctx);
  CltParams out;
  out.alpha = alpha;
  out.c = ctx.c;
  out.phi = pv.phi;
  out.phi_prime = pv.phi_prime;
  out.m_under = mp_m_underline(pv.phi, ctx);
  out.m_under2 = m_underline_2(pv.phi, ctx);
  out.m_tilde = m_tilde(pv.phi, ctx);
  out.kappa_s = 1.0 + pv.phi * alpha * out.m_under2 + alpha * out.m_under;
  out.theta = alpha * alpha * out.m_under2;
  const double denom = pv.phi * (1.0 + ctx.c * out.m_tilde);
  out.nu = alpha * alpha / (denom * denom);
  out.beta_x = beta;
  out.multiplicity = multiplicity;
  out.regime = regime;
  if (out.kappa_s == 0) throw NumericalError("kappa_s vanished");
  return out;
}

double kappa_s(double alpha, const StieltjesContext& ctx) { return clt_params(alpha, ctx).kappa_s; }

double theta(double alpha, const StieltjesContext& ctx) { return clt_params(alpha, ctx).theta; }

double nu(double alpha, const StieltjesContext& ctx) { return clt_params(alpha, ctx).nu; }

double beta_x(double fourth_moment, const VectorXd& u) {
  const double norm = u.norm();
  if (std::abs(norm - 1.0) > 1e-8) throw InvalidArgument("eigenvector column must have unit norm");
  return u.array().pow(4).sum() * fourth_moment - 3.0;
}

double omega_variance(const CltParams& params, bool diagonal) {
  if (!diagonal) return params.theta;
  double v = 2.0 * params.theta;
  if (params.regime == CltRegime::diagonal) v += params.beta_x * params.nu;
  return v;
}

double sigma_single(const CltParams& params) {
  if (params.multiplicity != 1) throw InvalidArgument("single-eigenvalue variance needs multiplicity 1");
  return omega_variance(params, true) / (params.kappa_s * params.kappa_s);
}

VectorXd sample_limit_block(Philox& rng, const CltParams& params) {
  const int m = params.multiplicity;
  const double sd_diag = std::sqrt(std::max(0.0, omega_variance(params, true)));
  const double sd_off = std::sqrt(omega_variance(params, false));
  std::normal_distribution<double> normal;
  MatrixXd w(m, m);
  for (int i = 0; i < m; ++i) {
    w(i, i) = sd_diag * normal(rng);
    for (int j = i + 1; j < m; ++j) {
      w(i, j) = sd_off * normal(rng);
      w(j, i) = w(i, j);
    }
  }
  w /= -params.kappa_s;
  if (m == 1) return VectorXd::Constant(1, w(0, 0));
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(w, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

std::string to_string(Centering c) { return c == Centering::bulk ? "bulk" : "full_spectrum"; }

Centering centering_from_string(const std::string& name) {
  if (name == "full_spectrum" || name == "full") return Centering::full_spectrum;
  if (name == "bulk") return Centering::bulk;
  throw InvalidArgument("unknown centering '" + name + "'");
}

double centering_phi(const PopulationModel& model, std::size_t group, double c_n, Centering centering) {
  const auto& spec = model.spec;
  if (group >= spec.spikes.size()) throw InvalidArgument("spike group index out of range");
  const double alpha = spec.spikes[group].alpha;
  if (centering == Centering::bulk) return phi_n(alpha, c_n, spec.bulk);
  std::vector<double> others;
  others.reserve(spec.eigenvalues.size());
  for (double v : spec.eigenvalues) {
    if (v != alpha) others.push_back(v);
  }
  if (others.empty()) return alpha;
  const double p = static_cast<double>(spec.p);
  const double c_other = c_n * static_cast<double>(others.size()) / p;
  return phi_n(alpha, c_other, BulkMeasure::empirical(others));
}

GammaSample gamma_from_eigs(const VectorXd& eigs, const PopulationModel& model, double c_n,
                            Centering centering) {
  const int p = model.p();
  if (eigs.size() != p) throw InvalidArgument("eigenvalue list length must equal p");
  if (!(c_n > 0)) throw InvalidArgument("c_n must be > 0");
  const double sqrt_n = std::sqrt(static_cast<double>(p) / c_n);
  GammaSample out;
  for (std::size_t k = 0; k < model.spec.spikes.size(); ++k) {
    const auto& g = model.spec.spikes[k];
    const double center = centering_phi(model, k, c_n, centering);
    VectorXd values(g.multiplicity);
    for (int i = 0; i < g.multiplicity; ++i) {
      values(i) = sqrt_n * (eigs(g.indices[i] - 1) / center - 1.0);
    }
    out.groups.push_back(std::move(values));
    out.centers.push_back(center);
  }
  return out;
}

}  // namespace spikelab
