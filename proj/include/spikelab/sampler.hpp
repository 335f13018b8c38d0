#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "spikelab/error.hpp"
#include "spikelab/model.hpp"
#include "spikelab/rng.hpp"
#include "spikelab/types.hpp"

namespace spikelab {

enum class Distribution { gaussian, rademacher, heavy_tail };

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& name);

/// E x^4 of the standardized law; empty for heavy_tail (infinite).
std::optional<double> fourth_moment(Distribution d);

/// One standardized draw.
double draw_entry(Distribution d, Philox& rng);

/// p x n matrix of iid standardized entries, filled column by column.
MatrixXd draw_matrix(Distribution d, int p, int n, Philox& rng);
MatrixXd draw_matrix(Distribution d, int p, int n, std::uint64_t seed, std::uint64_t stream = 0);

/// Symmetric heavy-tailed law with density a0 / ((|x|+1)^5 log(|x|+2)),
/// tabulated once and sampled by inverse CDF. Draws are divided by the
/// numerical standard deviation.
struct HeavyTailLaw {
  double a0;  // normalizing constant of the raw density
  double sd;  // standard deviation of the raw density
  /// P(|x| > tau) for the raw (unstandardized) law.
  double survival(double tau) const;
  /// Raw magnitude with P(|x| > value) = u, u in (0, 1].
  double quantile(double u) const;

  static const HeavyTailLaw& instance();
};

/// S = T (1/n) X X^T T^T.
template <typename Derived>
MatrixXd sample_cov(const PopulationModel& model, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != model.p()) throw InvalidArgument("data rows must equal the model dimension");
  if (x.cols() < 1) throw InvalidArgument("need at least one observation");
  const MatrixXd y = model.transform() * x;
  MatrixXd s = MatrixXd::Zero(y.rows(), y.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0 / static_cast<double>(x.cols()));
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

/// Full spectrum of a symmetric matrix, descending.
template <typename Derived>
Vector<typename Derived::Scalar> eigvals_desc(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols()) throw InvalidArgument("matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(s, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
  return solver.eigenvalues().reverse();
}

struct TruncationConfig {
  double eta_n = 0.0;

  /// eta_n = n^{-1/6}.
  static TruncationConfig for_n(int n);
};

/// Zeroes entries with |x| >= eta_n sqrt(n), then recenters and rescales with
/// the empirical mean and standard deviation of the truncated matrix.
MatrixXd truncate_center_rescale(const MatrixXd& x, const TruncationConfig& cfg, int n);

}  // namespace spikelab
