#include "spikelab/mc.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include "spikelab/error.hpp"

namespace spikelab {

void ExperimentConfig::validate() const {
  if (reps < 1) throw InvalidArgument("reps must be >= 1");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (model.p() < 1) throw InvalidArgument("model is empty");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  for (auto k : targets) {
    if (k >= model.spec.spikes.size()) throw InvalidArgument("target spike group out of range");
  }
}

Histogram freedman_diaconis(std::vector<double> values) {
  Histogram h;
  if (values.empty()) return h;
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double hi = values.back();
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < values.size() ? values[i] * (1 - f) + values[i + 1] * f : values[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
  int bins = 1;
  if (width > 0 && hi > lo) bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width)));
  const double step = hi > lo ? (hi - lo) / bins : 1.0;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + step * b);
  h.edges.back() = hi > lo ? hi : lo + 1.0;
  h.counts.assign(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / step);
    h.counts[std::clamp(b, 0, bins - 1)]++;
  }
  return h;
}

int DetectionTally::mode() const {
  int best = 0;
  double freq = -1.0;
  for (const auto& [value, f] : frequency) {
    if (f > freq) {
      best = value;
      freq = f;
    }
  }
  return best;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS distance needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(double level, std::size_t n1, std::size_t n2) {
  if (!(level > 0 && level < 1)) throw InvalidArgument("level must lie in (0, 1)");
  if (n1 == 0 || n2 == 0) throw InvalidArgument("sample sizes must be >= 1");
  const double a = static_cast<double>(n1);
  const double b = static_cast<double>(n2);
  return std::sqrt(-0.5 * std::log(level / 2.0)) * std::sqrt((a + b) / (a * b));
}

MatrixXd replication_data(const ExperimentConfig& cfg, int rep) {
  Philox rng(cfg.seed, static_cast<std::uint64_t>(rep));
  MatrixXd x = draw_matrix(cfg.dist, cfg.p(), cfg.n, rng);
  if (cfg.truncation) x = truncate_center_rescale(x, *cfg.truncation, cfg.n);
  return x;
}

namespace {

// Runs body(rep) for every replication on cfg.threads workers with static
// striding. Each rep writes only its own slot, so results are independent of
// scheduling.
void fan_out(int reps, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, reps));
  if (threads == 1) {
    for (int r = 0; r < reps; ++r) body(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int r = w; r < reps; r += threads) body(r);
    });
  }
  for (auto& t : pool) t.join();
}

std::vector<std::size_t> target_groups(const ExperimentConfig& cfg) {
  if (!cfg.targets.empty()) return cfg.targets;
  std::vector<std::size_t> all(cfg.model.spec.spikes.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return all;
}

struct RepOutcome {
  bool ok = false;
  std::string error;
  std::vector<VectorXd> gammas;  // per target
  std::vector<MatrixXd> omegas;  // per target
};

void check_failures(const std::vector<ReplicationFailure>& failures, int reps) {
  if (static_cast<double>(failures.size()) > 0.01 * reps) {
    std::ostringstream msg;
    msg << failures.size() << " of " << reps << " replications failed; first: rep "
        << failures.front().rep << ": " << failures.front().message;
    throw NumericalError(msg.str());
  }
}

GroupSummary summarize_group(const PopulationModel& model, std::size_t k, double center,
                             const std::vector<const VectorXd*>& rows,
                             const std::vector<const MatrixXd*>& omegas) {
  GroupSummary g;
  g.group = k;
  g.alpha = model.spec.spikes[k].alpha;
  g.multiplicity = model.spec.spikes[k].multiplicity;
  g.center = center;
  const int m = g.multiplicity;
  const auto count = static_cast<Eigen::Index>(rows.size());
  g.samples.resize(count, m);
  for (Eigen::Index r = 0; r < count; ++r) g.samples.row(r) = rows[r]->transpose();
  g.mean = count > 0 ? VectorXd(g.samples.colwise().mean().transpose()) : VectorXd::Zero(m);
  g.variance_defined = count > 1;
  if (g.variance_defined) {
    const MatrixXd centered = g.samples.rowwise() - g.mean.transpose();
    g.covariance = centered.transpose() * centered / static_cast<double>(count - 1);
    const VectorXd sums = g.samples.rowwise().sum();
    const double mean_sum = sums.mean();
    g.trace_variance = (sums.array() - mean_sum).square().sum() / static_cast<double>(count - 1);
  } else {
    g.covariance = MatrixXd::Zero(m, m);
  }
  std::vector<double> first(static_cast<std::size_t>(count));
  for (Eigen::Index r = 0; r < count; ++r) first[r] = g.samples(r, 0);
  g.histogram = freedman_diaconis(std::move(first));
  if (!omegas.empty()) {
    g.omega.resize(static_cast<Eigen::Index>(omegas.size()), m * m);
    for (std::size_t r = 0; r < omegas.size(); ++r) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) g.omega(static_cast<Eigen::Index>(r), i * m + j) = (*omegas[r])(i, j);
      }
    }
  }
  return g;
}

}  // namespace

EmpiricalSummary run_clt_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto targets = target_groups(cfg);
  const double c_n = cfg.c();
  std::vector<double> centers;
  for (auto k : targets) centers.push_back(centering_phi(cfg.model, k, c_n, cfg.centering));

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  fan_out(cfg.reps, cfg.threads, [&](int rep) {
    RepOutcome& out = outcomes[rep];
    try {
      const MatrixXd x = replication_data(cfg, rep);
      const VectorXd eigs = eigvals_desc(sample_cov(cfg.model, x));
      const GammaSample gs = gamma_from_eigs(eigs, cfg.model, c_n, cfg.centering);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        out.gammas.push_back(gs.groups[targets[t]]);
        if (cfg.record_omega) {
          const OmegaSample om = omega_statistic(centers[t], x, cfg.model);
          const auto [offset, m] = cfg.model.group_block(targets[t]);
          out.omegas.push_back(om.matrix.block(offset, offset, m, m));
        }
      }
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });

  EmpiricalSummary summary;
  summary.kind = "clt";
  summary.dist = cfg.dist;
  summary.reps = cfg.reps;
  for (int r = 0; r < cfg.reps; ++r) {
    if (!outcomes[r].ok) summary.failures.push_back({r, outcomes[r].error});
  }
  check_failures(summary.failures, cfg.reps);
  summary.completed = cfg.reps - static_cast<int>(summary.failures.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::vector<const VectorXd*> rows;
    std::vector<const MatrixXd*> omegas;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      rows.push_back(&o.gammas[t]);
      if (cfg.record_omega) omegas.push_back(&o.omegas[t]);
    }
    summary.groups.push_back(summarize_group(cfg.model, targets[t], centers[t], rows, omegas));
  }
  return summary;
}

EmpiricalSummary run_detection_experiment(const ExperimentConfig& cfg, const DetectionConfig& det) {
  cfg.validate();
  det.validate();
  std::vector<int> expected;
  for (const auto& g : cfg.model.spec.spikes) expected.insert(expected.end(), g.indices.begin(), g.indices.end());
  std::sort(expected.begin(), expected.end());

  struct DetOutcome {
    bool ok = false;
    std::string error;
    SpikeReport report;
  };
  std::vector<DetOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  fan_out(cfg.reps, cfg.threads, [&](int rep) {
    auto& out = outcomes[rep];
    try {
      const MatrixXd x = replication_data(cfg, rep);
      const VectorXd eigs = eigvals_desc(sample_cov(cfg.model, x));
      out.report = detect_spikes(eigs, det);
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });

  EmpiricalSummary summary;
  summary.kind = "detect";
  summary.dist = cfg.dist;
  summary.reps = cfg.reps;
  for (int r = 0; r < cfg.reps; ++r) {
    if (!outcomes[r].ok) summary.failures.push_back({r, outcomes[r].error});
  }
  check_failures(summary.failures, cfg.reps);
  summary.completed = cfg.reps - static_cast<int>(summary.failures.size());

  DetectionTally tally;
  tally.expected_ranks = expected;
  tally.mean_alpha_hat.assign(expected.size(), 0.0);
  tally.alpha_hat_counts.assign(expected.size(), 0);
  std::map<int, int> counts;
  int exact = 0;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    counts[o.report.m_hat]++;
    if (o.report.ranks() == expected) ++exact;
    for (const auto& d : o.report.detections) {
      const auto it = std::find(expected.begin(), expected.end(), d.rank);
      if (it == expected.end()) continue;
      const auto i = static_cast<std::size_t>(it - expected.begin());
      tally.mean_alpha_hat[i] += d.alpha_hat;
      tally.alpha_hat_counts[i]++;
    }
  }
  const double done = std::max(1, summary.completed);
  for (const auto& [value, count] : counts) tally.frequency[value] = count / done;
  tally.location_accuracy = exact / done;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (tally.alpha_hat_counts[i] > 0) tally.mean_alpha_hat[i] /= tally.alpha_hat_counts[i];
  }
  summary.detection = std::move(tally);
  return summary;
}

namespace {

bool same_model(const PopulationModel& a, const PopulationModel& b) {
  if (a.p() != b.p() || a.spike_count() != b.spike_count()) return false;
  if (a.spec.spikes != b.spec.spikes) return false;
  return (a.U - b.U).cwiseAbs().maxCoeff() <= 1e-12 && (a.d1 - b.d1).cwiseAbs().maxCoeff() <= 1e-12 &&
         (a.d2 - b.d2).cwiseAbs().maxCoeff() <= 1e-12;
}

}  // namespace

EmpiricalSummary universality_check(const ExperimentConfig& a, const ExperimentConfig& b, double level) {
  if (!same_model(a.model, b.model)) throw InvalidArgument("universality check needs the same model in both configurations");
  if (a.n != b.n || a.reps != b.reps) throw InvalidArgument("universality check needs matching n and reps");
  if (target_groups(a) != target_groups(b)) throw InvalidArgument("universality check needs matching targets");
  EmpiricalSummary first = run_clt_experiment(a);
  EmpiricalSummary second = run_clt_experiment(b);
  EmpiricalSummary out = first;
  out.kind = "universality";
  out.reference_groups = second.groups;
  out.failures.insert(out.failures.end(), second.failures.begin(), second.failures.end());
  for (std::size_t t = 0; t < first.groups.size(); ++t) {
    const auto& ga = first.groups[t].samples;
    const auto& gb = second.groups[t].samples;
    std::vector<double> xa(ga.col(0).data(), ga.col(0).data() + ga.rows());
    std::vector<double> xb(gb.col(0).data(), gb.col(0).data() + gb.rows());
    const double d = ks_distance(xa, xb);
    out.ks.push_back(d);
    out.ks_critical = ks_critical(level, xa.size(), xb.size());
    out.ks_pass.push_back(d < out.ks_critical);
  }
  return out;
}

}  // namespace spikelab
