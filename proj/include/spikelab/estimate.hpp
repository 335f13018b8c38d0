#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spikelab/clt.hpp"
#include "spikelab/model.hpp"
#include "spikelab/types.hpp"

namespace spikelab {

/// model: sigma from the closed-form limiting parameters at alpha_hat under the
///   plug-in bulk.
/// empirical: sigma from sample sums over all eigenvalues evaluated at phi_hat.
enum class VarianceSource { model, empirical };

std::string to_string(VarianceSource v);
VarianceSource variance_source_from_string(const std::string& name);

struct DetectionConfig {
  double c = 0.0;                          // p / n
  double ratio_threshold = 0.2;
  double lower_q = -1.6448536269514722;    // z_0.05
  double upper_q = 1.6448536269514722;     // z_0.95
  CltRegime regime = CltRegime::delocalized;
  std::optional<double> fourth_moment;     // required in the diagonal regime
  std::optional<BulkMeasure> bulk;         // overrides the plug-in bulk
  VarianceSource variance_source = VarianceSource::model;
  int max_refinements = 10;

  void validate() const;
};

/// (1/p) sum over i with |l_i - l_j| / max(l_i, l_j) >= threshold of 1/(l_i - l_j).
double empirical_m(double l_j, const VectorXd& eigs, const DetectionConfig& cfg);

/// -(1 - c)/lambda + c m.
double underline_from_m(double m_val, double lambda, double c);

/// -1 / underline_from_m(empirical_m(l_j)).
double alpha_hat(double l_j, const VectorXd& eigs, const DetectionConfig& cfg);

struct IntervalResult {
  bool valid = false;  // false: undetectable, counts as non-spike
  double alpha_hat = 0.0;
  double phi_hat = 0.0;
  double sigma2_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string reason;  // why the interval is invalid

  bool contains(double l) const { return valid && l >= lower && l <= upper; }
};

/// Bulk used inside phi_hat: cfg.bulk when given, else a point mass at the
/// mean of the eigenvalues that fall outside their own intervals, iterated to
/// a fixed point.
BulkMeasure plug_in_bulk(const VectorXd& eigs, const DetectionConfig& cfg);

/// Interval for l_j with a given plug-in bulk.
IntervalResult interval(double l_j, const VectorXd& eigs, const DetectionConfig& cfg,
                        const BulkMeasure& bulk);
IntervalResult interval(double l_j, const VectorXd& eigs, const DetectionConfig& cfg);

struct Detection {
  int rank = 0;  // 1-based
  double l = 0.0;
  double alpha_hat = 0.0;
  double phi_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct DetectedGroup {
  int first_rank = 0;
  int multiplicity = 0;
};

struct SpikeReport {
  int m_hat = 0;
  std::vector<Detection> detections;          // ascending rank
  std::vector<IntervalResult> intervals_all;  // one per rank
  std::vector<DetectedGroup> groups;          // runs of adjacent detections
  double plug_in_atom = 0.0;                  // NaN when the caller supplied the bulk
  int refinements = 0;

  std::vector<int> ranks() const;
};

/// eigs must be descending.
SpikeReport detect_spikes(const VectorXd& eigs, const DetectionConfig& cfg);

}  // namespace spikelab
