#include "spikelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spikelab/error.hpp"

namespace spikelab {

namespace {

constexpr double kMassTol = 1e-12;

std::vector<Atom> merge_sorted(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.t < b.t; });
  std::vector<Atom> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().t == a.t) {
      merged.back().w += a.w;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

}  // namespace

BulkMeasure BulkMeasure::point(double t) { return from_atoms({{t, 1.0}}); }

BulkMeasure BulkMeasure::from_atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidArgument("bulk measure needs at least one atom");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.t > 0) || !std::isfinite(a.t)) {
      throw InvalidArgument("bulk atom support points must be finite and > 0");
    }
    if (!(a.w > 0) || a.w > 1.0 + kMassTol) {
      throw InvalidArgument("bulk atom masses must lie in (0, 1]");
    }
    total += a.w;
  }
  if (std::abs(total - 1.0) > kMassTol) {
    std::ostringstream msg;
    msg << "bulk masses sum to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
  return BulkMeasure(merge_sorted(std::move(atoms)));
}

BulkMeasure BulkMeasure::empirical(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("empirical bulk needs at least one value");
  const double w = 1.0 / static_cast<double>(values.size());
  std::vector<Atom> atoms;
  atoms.reserve(values.size());
  for (double v : values) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw InvalidArgument("bulk values must be finite and > 0");
    }
    atoms.push_back({v, w});
  }
  // merging many equal weights can drift from 1 by a few ulps; renormalize
  auto merged = merge_sorted(std::move(atoms));
  double total = 0.0;
  for (const auto& a : merged) total += a.w;
  for (auto& a : merged) a.w /= total;
  return BulkMeasure(std::move(merged));
}

double BulkMeasure::mean() const {
  return integrate([](double t) { return t; });
}

int SpectrumSpec::total_multiplicity() const {
  int m = 0;
  for (const auto& g : spikes) m += g.multiplicity;
  return m;
}

SpectrumSpec SpectrumSpec::make(std::vector<double> bulk_values,
                                const std::vector<std::pair<double, int>>& spikes) {
  if (bulk_values.empty()) throw InvalidArgument("at least one bulk eigenvalue is required");

  // merge groups that share a spike value
  std::vector<std::pair<double, int>> groups;
  for (const auto& [alpha, m] : spikes) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw InvalidArgument("spike values must be > 0");
    if (m < 1) throw InvalidArgument("spike multiplicity must be >= 1");
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == alpha; });
    if (it != groups.end()) {
      it->second += m;
    } else {
      groups.emplace_back(alpha, m);
    }
  }
  std::sort(groups.begin(), groups.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  SpectrumSpec spec;
  spec.bulk = BulkMeasure::empirical(bulk_values);
  for (const auto& [alpha, m] : groups) {
    for (const auto& atom : spec.bulk.atoms()) {
      if (atom.t == alpha) {
        std::ostringstream msg;
        msg << "spike " << alpha << " lies on the bulk support";
        throw InvalidArgument(msg.str());
      }
    }
  }

  struct Entry {
    double value;
    int group;  // -1 for bulk
  };
  std::vector<Entry> entries;
  for (double v : bulk_values) entries.push_back({v, -1});
  for (std::size_t k = 0; k < groups.size(); ++k) {
    for (int i = 0; i < groups[k].second; ++i) entries.push_back({groups[k].first, static_cast<int>(k)});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    return (a.group >= 0) && (b.group < 0);
  });

  spec.p = static_cast<int>(entries.size());
  spec.spikes.resize(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    spec.spikes[k].alpha = groups[k].first;
    spec.spikes[k].multiplicity = groups[k].second;
  }
  spec.eigenvalues.reserve(entries.size());
  for (std::size_t r = 0; r < entries.size(); ++r) {
    spec.eigenvalues.push_back(entries[r].value);
    if (entries[r].group >= 0) spec.spikes[entries[r].group].indices.push_back(static_cast<int>(r) + 1);
  }
  return spec;
}

std::string to_string(DesignCase c) {
  switch (c) {
    case DesignCase::case1:
      return "case1";
    case DesignCase::case2:
      return "case2";
    case DesignCase::custom:
      return "custom";
  }
  return "custom";
}

std::pair<int, int> PopulationModel::group_block(std::size_t k) const {
  if (k >= spec.spikes.size()) throw InvalidArgument("spike group index out of range");
  int offset = 0;
  for (std::size_t i = 0; i < k; ++i) offset += spec.spikes[i].multiplicity;
  return {offset, spec.spikes[k].multiplicity};
}

MatrixXd PopulationModel::transform() const {
  VectorXd root(p());
  root << d1.cwiseSqrt(), d2.cwiseSqrt();
  return V * root.asDiagonal() * U.transpose();
}

MatrixXd PopulationModel::covariance() const {
  const MatrixXd t = transform();
  return t * t.transpose();
}

PopulationModel make_model(SpectrumSpec spec, const MatrixXd& basis, DesignCase kind,
                           std::optional<double> rho) {
  const int p = spec.p;
  if (basis.rows() != p || basis.cols() != p) throw InvalidArgument("basis must be p x p");
  const double err = (basis.transpose() * basis - MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw InvalidArgument("basis is not orthogonal");

  std::vector<int> order;  // 0-based ranks: spikes in group order, then bulk
  std::vector<bool> is_spike(p, false);
  for (const auto& g : spec.spikes) {
    for (int r : g.indices) {
      order.push_back(r - 1);
      is_spike[r - 1] = true;
    }
  }
  const int m = static_cast<int>(order.size());
  for (int r = 0; r < p; ++r) {
    if (!is_spike[r]) order.push_back(r);
  }

  PopulationModel model;
  model.U.resize(p, p);
  model.d1.resize(m);
  model.d2.resize(p - m);
  for (int i = 0; i < p; ++i) {
    model.U.col(i) = basis.col(order[i]);
    const double value = spec.eigenvalues[order[i]];
    if (i < m) {
      model.d1(i) = value;
    } else {
      model.d2(i - m) = value;
    }
  }
  model.V = model.U;
  model.spec = std::move(spec);
  model.kind = kind;
  model.rho = rho;
  return model;
}

namespace {

SpectrumSpec design_spectrum(int p) {
  if (p < 7) throw InvalidArgument("design dimension must be >= 7");
  std::vector<double> bulk(p - 6, 1.0);
  return SpectrumSpec::make(std::move(bulk), {{4.0, 1}, {3.0, 2}, {0.2, 2}, {0.1, 1}});
}

}  // namespace

PopulationModel build_case1(int p) {
  auto spec = design_spectrum(p);
  return make_model(std::move(spec), MatrixXd::Identity(p, p), DesignCase::case1);
}

MatrixXd toeplitz_eigenvectors(int p, double rho) {
  if (!(rho > 0 && rho < 1)) throw InvalidArgument("rho must lie in (0, 1)");
  MatrixXd t(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) t(i, j) = std::pow(rho, std::abs(i - j));
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(t);
  if (solver.info() != Eigen::Success) throw NumericalError("Toeplitz eigensolve failed");
  MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
  for (int j = 0; j < p; ++j) {
    Eigen::Index at = 0;
    vecs.col(j).cwiseAbs().maxCoeff(&at);
    if (vecs(at, j) < 0) vecs.col(j) = -vecs.col(j);
  }
  return vecs;
}

PopulationModel build_case2(int p, double rho) {
  if (!(rho > 0 && rho < 1)) throw InvalidArgument("rho must lie in (0, 1)");
  auto spec = design_spectrum(p);
  return make_model(std::move(spec), toeplitz_eigenvectors(p, rho), DesignCase::case2, rho);
}

std::vector<SpikeGroup> spike_groups(const SpectrumSpec& spec) {
  auto groups = spec.spikes;
  std::stable_sort(groups.begin(), groups.end(),
                   [](const SpikeGroup& a, const SpikeGroup& b) { return a.alpha > b.alpha; });
  return groups;
}

}  // namespace spikelab
