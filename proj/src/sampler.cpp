#include "spikelab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace spikelab {

namespace {

// Magnitude density of the heavy-tail law, up to a0, in the variable
// y = log(1 + x): 2 / ((1+x)^4 log(x+2)).
double tail_kernel(double y) {
  const double x = std::expm1(y);
  return 2.0 / (std::exp(4.0 * y) * std::log(x + 2.0));
}

class HeavyTailTable {
 public:
  HeavyTailTable() {
    const int cells = 8000;
    y_max_ = std::log1p(1e6);
    h_ = y_max_ / cells;
    y_.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) y_[i] = h_ * i;

    // mass beyond the grid: leading term of the tail integral
    const double x_end = std::expm1(y_max_);
    const double far = 2.0 / (4.0 * std::pow(1.0 + x_end, 4) * std::log(x_end + 2.0));

    std::vector<double> tail(cells + 1);
    tail[cells] = far;
    double second = 0.0;  // int x^2 g dx over the grid
    for (int i = cells - 1; i >= 0; --i) {
      const double a = y_[i];
      const double b = y_[i + 1];
      const double m = 0.5 * (a + b);
      const double fa = tail_kernel(a);
      const double fm = tail_kernel(m);
      const double fb = tail_kernel(b);
      tail[i] = tail[i + 1] + h_ / 6.0 * (fa + 4 * fm + fb);
      auto sq = [](double y) {
        const double x = std::expm1(y);
        return x * x;
      };
      second += h_ / 6.0 * (fa * sq(a) + 4 * fm * sq(m) + fb * sq(b));
    }
    const double total = tail[0];
    a0_ = 1.0 / total;
    log_s_.resize(cells + 1);
    for (int i = 0; i <= cells; ++i) log_s_[i] = std::log(tail[i] / total);
    sd_ = std::sqrt(second / total);
  }

  double a0() const { return a0_; }
  double sd() const { return sd_; }

  double survival(double tau) const {
    if (tau <= 0) return 1.0;
    const double y = std::log1p(tau);
    if (y >= y_max_) {
      return a0_ * 2.0 / (4.0 * std::pow(1.0 + tau, 4) * std::log(tau + 2.0));
    }
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(y / h_), y_.size() - 2);
    const double f = (y - y_[i]) / h_;
    return std::exp((1 - f) * log_s_[i] + f * log_s_[i + 1]);
  }

  double quantile(double u) const {
    if (!(u > 0 && u <= 1)) throw InvalidArgument("quantile level must lie in (0, 1]");
    const double lu = std::log(u);
    if (lu <= log_s_.back()) {
      // beyond the table: invert a0 / (2 (1+x)^4 log(x+2)) = u by fixed point
      double x = std::expm1(y_max_);
      for (int k = 0; k < 20; ++k) {
        x = std::pow(a0_ / (2.0 * u * std::log(x + 2.0)), 0.25) - 1.0;
      }
      return x;
    }
    // log_s_ is decreasing in i
    const auto it = std::lower_bound(log_s_.begin(), log_s_.end(), lu, std::greater<double>());
    const std::size_t j = static_cast<std::size_t>(it - log_s_.begin());
    if (j == 0) return 0.0;
    const double s0 = log_s_[j - 1];
    const double s1 = log_s_[j];
    const double f = (s0 - lu) / (s0 - s1);
    return std::expm1(y_[j - 1] + f * h_);
  }

 private:
  std::vector<double> y_;
  std::vector<double> log_s_;
  double y_max_ = 0.0;
  double h_ = 0.0;
  double a0_ = 0.0;
  double sd_ = 0.0;
};

const HeavyTailTable& table() {
  static const HeavyTailTable t;
  return t;
}

}  // namespace

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian:
      return "gaussian";
    case Distribution::rademacher:
      return "rademacher";
    case Distribution::heavy_tail:
      return "heavy_tail";
  }
  return "gaussian";
}

Distribution distribution_from_string(const std::string& name) {
  if (name == "gaussian" || name == "normal") return Distribution::gaussian;
  if (name == "rademacher" || name == "binary") return Distribution::rademacher;
  if (name == "heavy_tail" || name == "heavy-tail") return Distribution::heavy_tail;
  throw InvalidArgument("unknown distribution '" + name + "'");
}

std::optional<double> fourth_moment(Distribution d) {
  switch (d) {
    case Distribution::gaussian:
      return 3.0;
    case Distribution::rademacher:
      return 1.0;
    case Distribution::heavy_tail:
      return std::nullopt;
  }
  return std::nullopt;
}

double HeavyTailLaw::survival(double tau) const { return table().survival(tau); }
double HeavyTailLaw::quantile(double u) const { return table().quantile(u); }

const HeavyTailLaw& HeavyTailLaw::instance() {
  static const HeavyTailLaw law{table().a0(), table().sd()};
  return law;
}

double draw_entry(Distribution d, Philox& rng) {
  switch (d) {
    case Distribution::gaussian: {
      std::normal_distribution<double> normal;
      return normal(rng);
    }
    case Distribution::rademacher:
      return (rng() & 1u) ? 1.0 : -1.0;
    case Distribution::heavy_tail: {
      const auto& t = table();
      const double sign = (rng() & 1u) ? 1.0 : -1.0;
      const double u = 1.0 - rng.uniform();  // (0, 1]
      return sign * t.quantile(u) / t.sd();
    }
  }
  return 0.0;
}

MatrixXd draw_matrix(Distribution d, int p, int n, Philox& rng) {
  if (p < 1 || n < 1) throw InvalidArgument("matrix dimensions must be >= 1");
  MatrixXd x(p, n);
  if (d == Distribution::gaussian) {
    std::normal_distribution<double> normal;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < p; ++i) x(i, j) = normal(rng);
    }
    return x;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) x(i, j) = draw_entry(d, rng);
  }
  return x;
}

MatrixXd draw_matrix(Distribution d, int p, int n, std::uint64_t seed, std::uint64_t stream) {
  Philox rng(seed, stream);
  return draw_matrix(d, p, n, rng);
}

TruncationConfig TruncationConfig::for_n(int n) {
  if (n < 1) throw InvalidArgument("n must be >= 1");
  return {std::pow(static_cast<double>(n), -1.0 / 6.0)};
}

MatrixXd truncate_center_rescale(const MatrixXd& x, const TruncationConfig& cfg, int n) {
  if (!(cfg.eta_n > 0)) throw InvalidArgument("eta_n must be > 0");
  if (n < 1) throw InvalidArgument("n must be >= 1");
  if (x.size() == 0) throw InvalidArgument("empty matrix");
  const double cut = cfg.eta_n * std::sqrt(static_cast<double>(n));
  MatrixXd y = x.unaryExpr([cut](double v) { return std::abs(v) < cut ? v : 0.0; });
  const double mean = y.mean();
  y.array() -= mean;
  const double sd = std::sqrt(y.squaredNorm() / static_cast<double>(y.size()));
  if (!(sd > 0)) throw NumericalError("truncated matrix is constant; cannot rescale");
  y /= sd;
  y.array() -= y.mean();
  return y;
}

}  // namespace spikelab
