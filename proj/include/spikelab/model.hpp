#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spikelab/types.hpp"

namespace spikelab {

struct Atom {
  double t;  // support point, > 0
  double w;  // mass in (0, 1]
};

/// Discrete population spectral measure. Atoms are kept sorted ascending by
/// support point, with duplicate points merged; masses sum to one.
class BulkMeasure {
 public:
  BulkMeasure() = default;

  static BulkMeasure point(double t);
  static BulkMeasure from_atoms(std::vector<Atom> atoms);
  /// Uniform measure on the given values (ties merged).
  static BulkMeasure empirical(std::span<const double> values);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  double min_point() const { return atoms_.front().t; }
  double max_point() const { return atoms_.back().t; }
  double mean() const;
  bool is_point_mass() const { return atoms_.size() == 1; }

  /// Sum of w_i * f(t_i).
  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.w * f(a.t);
    return acc;
  }

 private:
  explicit BulkMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {}
  std::vector<Atom> atoms_;
};

struct SpikeGroup {
  double alpha = 0.0;
  int multiplicity = 0;
  std::vector<int> indices;  // 1-based ranks in the descending spectrum

  bool operator==(const SpikeGroup&) const = default;
};

/// Population eigenvalue layout: bulk values plus spike groups placed at their
/// ranks in the descending spectrum.
struct SpectrumSpec {
  int p = 0;
  BulkMeasure bulk;
  std::vector<SpikeGroup> spikes;   // descending alpha
  std::vector<double> eigenvalues;  // descending, length p

  int total_multiplicity() const;

  /// Builds the layout from p - M bulk eigenvalues and (alpha, multiplicity)
  /// pairs. Sorting is stable with spikes ahead of bulk values on ties.
  static SpectrumSpec make(std::vector<double> bulk_values,
                           const std::vector<std::pair<double, int>>& spikes);
};

enum class DesignCase { case1, case2, custom };

std::string to_string(DesignCase c);

/// Sigma = T T^T with T = V diag(D1, D2)^{1/2} U^T. The first M columns of U
/// carry the spikes in group order (descending alpha), the rest the bulk.
struct PopulationModel {
  SpectrumSpec spec;
  MatrixXd U;
  MatrixXd V;
  VectorXd d1;  // spikes, length M
  VectorXd d2;  // bulk, length p - M
  DesignCase kind = DesignCase::custom;
  std::optional<double> rho;

  int p() const { return spec.p; }
  int spike_count() const { return static_cast<int>(d1.size()); }
  auto u1() const { return U.leftCols(spike_count()); }
  auto u2() const { return U.rightCols(p() - spike_count()); }

  /// Offset of spike group k inside D1 and its multiplicity.
  std::pair<int, int> group_block(std::size_t k) const;

  MatrixXd transform() const;  // T_p
  MatrixXd covariance() const;  // Sigma
};

/// Builds the model from a layout and an orthogonal basis whose r-th column is
/// the eigenvector of the r-th largest population eigenvalue.
PopulationModel make_model(SpectrumSpec spec, const MatrixXd& basis, DesignCase kind,
                           std::optional<double> rho = std::nullopt);

/// Diagonal Sigma = diag(4,3,3,0.2,0.2,0.1,1,...,1) sorted descending.
PopulationModel build_case1(int p);

/// Same spectrum rotated by the eigenvectors of the Toeplitz matrix rho^|i-j|.
PopulationModel build_case2(int p, double rho);

/// Eigenvectors of rho^|i-j|, columns ordered by descending eigenvalue; each
/// column's largest-magnitude entry is made positive.
MatrixXd toeplitz_eigenvectors(int p, double rho);

std::vector<SpikeGroup> spike_groups(const SpectrumSpec& spec);

}  // namespace spikelab
