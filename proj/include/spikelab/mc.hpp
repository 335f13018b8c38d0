#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spikelab/clt.hpp"
#include "spikelab/estimate.hpp"
#include "spikelab/model.hpp"
#include "spikelab/sampler.hpp"
#include "spikelab/types.hpp"

namespace spikelab {

struct ExperimentConfig {
  PopulationModel model;
  Distribution dist = Distribution::gaussian;
  int n = 0;
  int reps = 1000;
  std::uint64_t seed = 0;
  std::vector<std::size_t> targets;  // spike group indices; empty = all
  int threads = 1;
  Centering centering = Centering::full_spectrum;
  bool record_omega = false;  // also evaluate the block statistic at each center
  std::optional<TruncationConfig> truncation;

  int p() const { return model.p(); }
  double c() const { return static_cast<double>(model.p()) / n; }
  void validate() const;
};

/// (edge, count) pairs; edges has one more entry than counts.
struct Histogram {
  std::vector<double> edges;
  std::vector<int> counts;
};

/// Freedman-Diaconis bin width 2 IQR / n^{1/3}.
Histogram freedman_diaconis(std::vector<double> values);

struct GroupSummary {
  std::size_t group = 0;
  double alpha = 0.0;
  int multiplicity = 0;
  double center = 0.0;
  MatrixXd samples;  // completed reps x multiplicity, rep order
  VectorXd mean;
  MatrixXd covariance;
  double trace_variance = 0.0;  // variance of the sum over the group
  bool variance_defined = false;
  Histogram histogram;  // of the first column
  MatrixXd omega;       // reps x multiplicity^2 (row-major block), when recorded
};

struct DetectionTally {
  std::map<int, double> frequency;  // m_hat -> relative frequency
  std::vector<int> expected_ranks;
  double location_accuracy = 0.0;   // share of reps whose ranks match exactly
  std::vector<double> mean_alpha_hat;  // per expected rank, over reps detecting it
  std::vector<int> alpha_hat_counts;
  int mode() const;
};

struct ReplicationFailure {
  int rep = 0;
  std::string message;
};

struct EmpiricalSummary {
  std::string kind;  // clt | detect | universality
  Distribution dist = Distribution::gaussian;
  int reps = 0;
  int completed = 0;
  std::vector<GroupSummary> groups;
  std::vector<GroupSummary> reference_groups;  // second configuration (universality)
  std::optional<DetectionTally> detection;
  std::vector<double> ks;  // per group
  double ks_critical = 0.0;
  std::vector<bool> ks_pass;
  std::vector<ReplicationFailure> failures;
};

EmpiricalSummary run_clt_experiment(const ExperimentConfig& cfg);

EmpiricalSummary run_detection_experiment(const ExperimentConfig& cfg, const DetectionConfig& det);

/// Runs both configurations and compares the largest gamma of each target
/// group with a two-sample Kolmogorov-Smirnov test at level `level`.
EmpiricalSummary universality_check(const ExperimentConfig& a, const ExperimentConfig& b,
                                    double level = 0.01);

/// sup_x |F_a(x) - F_b(x)|.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample critical value sqrt(-log(level/2)/2) sqrt((n1+n2)/(n1 n2)).
double ks_critical(double level, std::size_t n1, std::size_t n2);

/// Draws the data matrix of replication `rep` (after truncation when set).
MatrixXd replication_data(const ExperimentConfig& cfg, int rep);

}  // namespace spikelab
