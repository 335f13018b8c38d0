#include "spikelab/estimate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "spikelab/error.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab {

std::string to_string(VarianceSource v) { return v == VarianceSource::empirical ? "empirical" : "model"; }

VarianceSource variance_source_from_string(const std::string& name) {
  if (name == "model") return VarianceSource::model;
  if (name == "empirical") return VarianceSource::empirical;
  throw InvalidArgument("unknown variance source '" + name + "'");
}

void DetectionConfig::validate() const {
  if (!(c > 0) || !std::isfinite(c)) throw InvalidArgument("detection needs c = p/n > 0");
  if (!(ratio_threshold > 0 && ratio_threshold < 1)) throw InvalidArgument("ratio_threshold must lie in (0, 1)");
  if (!(lower_q < 0 && upper_q > 0)) throw InvalidArgument("quantiles must satisfy lower < 0 < upper");
  if (regime == CltRegime::diagonal && !fourth_moment) {
    throw InvalidArgument("diagonal regime needs the fourth moment of the entries");
  }
  if (max_refinements < 0) throw InvalidArgument("max_refinements must be >= 0");
}

double empirical_m(double l_j, const VectorXd& eigs, const DetectionConfig& cfg) {
  if (eigs.size() == 0) throw InvalidArgument("eigenvalue list is empty");
  double acc = 0.0;
  int used = 0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double l_i = eigs(i);
    const double top = std::max(std::abs(l_i), std::abs(l_j));
    if (top == 0) continue;
    if (std::abs(l_i - l_j) / top >= cfg.ratio_threshold) {
      acc += 1.0 / (l_i - l_j);
      ++used;
    }
  }
  if (used == 0) {
    std::ostringstream msg;
    msg << "no eigenvalue is separated from " << l_j << " by the ratio threshold";
    throw EstimationError(msg.str());
  }
  return acc / static_cast<double>(eigs.size());
}

double underline_from_m(double m_val, double lambda, double c) {
  if (lambda == 0) throw InvalidArgument("lambda must be nonzero");
  return -(1.0 - c) / lambda + c * m_val;
}

double alpha_hat(double l_j, const VectorXd& eigs, const DetectionConfig& cfg) {
  const double mu = underline_from_m(empirical_m(l_j, eigs, cfg), l_j, cfg.c);
  if (mu == 0) throw EstimationError("estimated companion transform is zero");
  return -1.0 / mu;
}

namespace {

double empirical_sigma2(double alpha, double phi_hat, const VectorXd& eigs, const DetectionConfig& cfg,
                        const StieltjesContext& ctx) {
  const double p = static_cast<double>(eigs.size());
  double m1 = 0.0;
  double m2 = 0.0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double d = eigs(i) - phi_hat;
    if (d == 0) throw EstimationError("phi_hat coincides with a sample eigenvalue");
    m1 += 1.0 / d;
    m2 += 1.0 / (d * d);
  }
  m1 /= p;
  m2 /= p;
  const double c = cfg.c;
  const double mu = -(1.0 - c) / phi_hat + c * m1;
  const double mu2 = (1.0 - c) / (phi_hat * phi_hat) + c * m2;
  const double kappa = 1.0 + phi_hat * alpha * mu2 + alpha * mu;
  double diag = 2.0 * alpha * alpha * mu2;
  if (cfg.regime == CltRegime::diagonal) diag += (*cfg.fourth_moment - 3.0) * nu(alpha, ctx);
  if (kappa == 0) throw EstimationError("estimated kappa_s is zero");
  return diag / (kappa * kappa);
}

}  // namespace

IntervalResult interval(double l_j, const VectorXd& eigs, const DetectionConfig& cfg, const BulkMeasure& bulk) {
  cfg.validate();
  IntervalResult out;
  try {
    out.alpha_hat = alpha_hat(l_j, eigs, cfg);
    const StieltjesContext ctx(cfg.c, bulk);
    if (!(out.alpha_hat > 0)) {
      out.reason = "alpha_hat is not positive";
      return out;
    }
    const PhaseValue pv = rho(out.alpha_hat, ctx);
    if (pv.regime != PhaseRegime::distant) {
      out.phi_hat = pv.rho;
      out.reason = "alpha_hat is below the detection threshold";
      return out;
    }
    out.phi_hat = pv.phi;
    if (cfg.variance_source == VarianceSource::model) {
      const double beta = cfg.fourth_moment ? *cfg.fourth_moment - 3.0 : 0.0;
      const CltParams params = clt_params(out.alpha_hat, ctx, 1, cfg.regime, beta);
      out.sigma2_hat = sigma_single(params);
    } else {
      out.sigma2_hat = empirical_sigma2(out.alpha_hat, out.phi_hat, eigs, cfg, ctx);
    }
  } catch (const Error& e) {
    out.reason = e.what();
    return out;
  }
  if (!(out.sigma2_hat >= 0) || !std::isfinite(out.sigma2_hat)) {
    out.reason = "estimated variance is not a finite nonnegative number";
    return out;
  }
  const double n = static_cast<double>(eigs.size()) / cfg.c;
  const double s = std::sqrt(out.sigma2_hat / n);
  out.lower = (1.0 + cfg.lower_q * s) * out.phi_hat;
  out.upper = (1.0 + cfg.upper_q * s) * out.phi_hat;
  out.valid = true;
  return out;
}

namespace {

std::vector<IntervalResult> all_intervals(const VectorXd& eigs, const DetectionConfig& cfg,
                                          const BulkMeasure& bulk) {
  std::vector<IntervalResult> out;
  out.reserve(static_cast<std::size_t>(eigs.size()));
  for (Eigen::Index j = 0; j < eigs.size(); ++j) out.push_back(interval(eigs(j), eigs, cfg, bulk));
  return out;
}

struct PlugIn {
  BulkMeasure bulk;
  double atom = 0.0;
  int refinements = 0;
  std::vector<IntervalResult> intervals;
};

PlugIn fit_plug_in(const VectorXd& eigs, const DetectionConfig& cfg) {
  if (eigs.size() == 0) throw InvalidArgument("eigenvalue list is empty");
  PlugIn out;
  out.atom = eigs.mean();
  if (!(out.atom > 0)) throw EstimationError("eigenvalue mean must be positive");
  out.bulk = BulkMeasure::point(out.atom);
  out.intervals = all_intervals(eigs, cfg, out.bulk);
  for (int it = 0; it < cfg.max_refinements; ++it) {
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index j = 0; j < eigs.size(); ++j) {
      if (!out.intervals[j].contains(eigs(j))) {
        sum += eigs(j);
        ++count;
      }
    }
    if (count == 0) break;
    const double next = sum / count;
    if (!(next > 0) || next == out.atom) break;
    out.atom = next;
    out.bulk = BulkMeasure::point(next);
    out.intervals = all_intervals(eigs, cfg, out.bulk);
    out.refinements = it + 1;
  }
  return out;
}

}  // namespace

BulkMeasure plug_in_bulk(const VectorXd& eigs, const DetectionConfig& cfg) {
  cfg.validate();
  if (cfg.bulk) return *cfg.bulk;
  return fit_plug_in(eigs, cfg).bulk;
}

IntervalResult interval(double l_j, const VectorXd& eigs, const DetectionConfig& cfg) {
  return interval(l_j, eigs, cfg, plug_in_bulk(eigs, cfg));
}

std::vector<int> SpikeReport::ranks() const {
  std::vector<int> out;
  for (const auto& d : detections) out.push_back(d.rank);
  return out;
}

SpikeReport detect_spikes(const VectorXd& eigs, const DetectionConfig& cfg) {
  cfg.validate();
  for (Eigen::Index j = 1; j < eigs.size(); ++j) {
    if (eigs(j) > eigs(j - 1)) throw InvalidArgument("eigenvalues must be sorted descending");
  }
  SpikeReport report;
  if (cfg.bulk) {
    report.intervals_all = all_intervals(eigs, cfg, *cfg.bulk);
    report.plug_in_atom = std::numeric_limits<double>::quiet_NaN();
  } else {
    auto fit = fit_plug_in(eigs, cfg);
    report.intervals_all = std::move(fit.intervals);
    report.plug_in_atom = fit.atom;
    report.refinements = fit.refinements;
  }
  for (Eigen::Index j = 0; j < eigs.size(); ++j) {
    const auto& iv = report.intervals_all[j];
    if (!iv.contains(eigs(j))) continue;
    const int rank = static_cast<int>(j) + 1;
    report.detections.push_back({rank, eigs(j), iv.alpha_hat, iv.phi_hat, iv.lower, iv.upper});
    if (!report.groups.empty() &&
        report.groups.back().first_rank + report.groups.back().multiplicity == rank) {
      ++report.groups.back().multiplicity;
    } else {
      report.groups.push_back({rank, 1});
    }
  }
  report.m_hat = static_cast<int>(report.detections.size());
  return report;
}

}  // namespace spikelab
