#include "doctest.h"

#include <cmath>

#include "spikelab/clt.hpp"
#include "spikelab/error.hpp"
#include "spikelab/sampler.hpp"

using namespace spikelab;
using doctest::Approx;

namespace {

StieltjesContext unit(double c) { return StieltjesContext(c, BulkMeasure::point(1.0)); }

// Dense n x n evaluation straight from the definition.
MatrixXd omega_dense(double lambda, const MatrixXd& x, const PopulationModel& model) {
  const auto n = static_cast<double>(x.cols());
  const MatrixXd gamma = model.u2() * model.d2.asDiagonal() * model.u2().transpose();
  const MatrixXd a = lambda * MatrixXd::Identity(x.cols(), x.cols()) - x.transpose() * gamma * x / n;
  const MatrixXd r = a.inverse();
  const VectorXd root = model.d1.cwiseSqrt();
  const MatrixXd inner = model.u1().transpose() * x * r * x.transpose() * model.u1();
  const MatrixXd d1 = model.d1.asDiagonal();
  const MatrixXd raw = (r.trace() * d1 - root.asDiagonal() * inner * root.asDiagonal()) / std::sqrt(n);
  return 0.5 * (raw + raw.transpose());
}

PopulationModel single_spike(int p, double alpha) {
  return make_model(SpectrumSpec::make(std::vector<double>(p - 1, 1.0), {{alpha, 1}}), MatrixXd::Identity(p, p),
                    DesignCase::custom);
}

}  // namespace

TEST_SUITE("clt") {
  TEST_CASE("kappa and theta closed forms") {
    const auto ctx = unit(0.5);
    CHECK(kappa_s(3, ctx) == Approx(10.0 / 7.0).epsilon(1e-12));
    CHECK(2 * theta(3, ctx) == Approx(16.0 / 7.0).epsilon(1e-12));
    CHECK(kappa_s(0.2, ctx) == Approx(12.0 / 7.0).epsilon(1e-12));
    CHECK(2 * theta(0.2, ctx) == Approx(64.0 / 7.0).epsilon(1e-12));
    CHECK(kappa_s(5, unit(0.0)) == Approx(1.0));
    CHECK(theta(5, unit(0.0)) == Approx(1.0));
    CHECK_THROWS_AS(kappa_s(1.5, ctx), DomainError);
  }

  TEST_CASE("generic route matches unit-bulk closed forms") {
    for (double c : {0.1, 0.5, 0.9}) {
      const auto ctx = unit(c);
      for (double a : {0.05, 0.1, 0.2, 3.0, 4.0, 10.0}) {
        if (phi_prime(a, ctx) <= 0) {
          CHECK_THROWS_AS(kappa_s(a, ctx), DomainError);
          continue;
        }
        const double lam = phi(a, ctx);
        const double m = detail::m_underline_by_inversion(lam, ctx);
        const double m2 = 1.0 / (1.0 / (m * m) - c / ((1 + m) * (1 + m)));
        const double k_generic = 1 + lam * a * m2 + a * m;
        const double closed_k = lam / (a * (1 - c / ((a - 1) * (a - 1))));
        const double closed_t = 1.0 / (1 - c / ((a - 1) * (a - 1)));
        CHECK(std::abs(k_generic - closed_k) < 1e-9 * std::abs(closed_k));
        CHECK(std::abs(a * a * m2 - closed_t) < 1e-9 * closed_t);
        CHECK(std::abs(kappa_s(a, ctx) - closed_k) < 1e-9 * std::abs(closed_k));
        CHECK(std::abs(1 + a * mp_m_underline(lam, ctx)) < 1e-9);
      }
    }
  }

  TEST_CASE("nu is one") {
    CHECK(nu(4, unit(0.5)) == Approx(1.0).epsilon(1e-12));
    CHECK(nu(0.1, unit(0.5)) == Approx(1.0).epsilon(1e-12));
    CHECK(nu(4, unit(0.0)) == Approx(1.0).epsilon(1e-12));
    const StieltjesContext mixed(0.3, BulkMeasure::from_atoms({{0.5, 0.2}, {1.0, 0.5}, {2.0, 0.3}}));
    CHECK(nu(8.0, mixed) == Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("beta_x") {
    VectorXd e1 = VectorXd::Zero(5);
    e1(0) = 1;
    CHECK(beta_x(3.0, e1) == Approx(0.0));
    CHECK(beta_x(1.0, e1) == Approx(-2.0));
    // 100 equal entries: sum u^4 = 0.01
    const VectorXd flat = VectorXd::Constant(100, 0.1);
    CHECK(beta_x(3.0, flat) == Approx(-2.97).epsilon(1e-12));
    CHECK_THROWS_AS(beta_x(3.0, VectorXd::Ones(3)), InvalidArgument);
  }

  TEST_CASE("entry variances") {
    const auto ctx = unit(0.5);
    const auto gauss = clt_params(3, ctx, 2);
    CHECK(omega_variance(gauss, true) == Approx(16.0 / 7.0));
    CHECK(omega_variance(gauss, false) == Approx(8.0 / 7.0));
    const auto binary = clt_params(3, ctx, 2, CltRegime::diagonal, -2.0);
    CHECK(omega_variance(binary, true) == Approx(2.0 / 7.0).epsilon(1e-10));
    CHECK(omega_variance(binary, false) == Approx(8.0 / 7.0));
  }

  TEST_CASE("single eigenvalue variance") {
    const auto ctx = unit(0.5);
    CHECK(sigma_single(clt_params(4, ctx)) == Approx(68.0 / 49.0).epsilon(1e-12));
    CHECK(sigma_single(clt_params(0.1, ctx)) == Approx(3.875).epsilon(1e-12));
    CHECK(sigma_single(clt_params(0.1, ctx, 1, CltRegime::diagonal, -2.0)) == Approx(2.392).epsilon(1e-3));
    CHECK(sigma_single(clt_params(4, ctx, 1, CltRegime::diagonal, -2.0)) == Approx(0.0771).epsilon(1e-3));
    CHECK_THROWS_AS(sigma_single(clt_params(3, ctx, 2)), InvalidArgument);
    CHECK(clt_params(4, ctx).m_under == Approx(-0.25).epsilon(1e-10));
  }

  TEST_CASE("limit block sampler moments") {
    const auto params = clt_params(3, unit(0.5), 2);
    const double k2 = params.kappa_s * params.kappa_s;
    Philox rng(42);
    const int draws = 100000;
    double tr_sum = 0, tr_sq = 0, sq_sum = 0, top = 0, bottom = 0;
    for (int i = 0; i < draws; ++i) {
      const VectorXd ev = sample_limit_block(rng, params);
      REQUIRE(ev(0) >= ev(1));
      const double tr = ev.sum();
      tr_sum += tr;
      tr_sq += tr * tr;
      sq_sum += ev.squaredNorm();
      top += ev(0);
      bottom += ev(1);
    }
    const double tr_var = tr_sq / draws - (tr_sum / draws) * (tr_sum / draws);
    // trace gets both diagonal entries: 2 (2 theta) / kappa^2
    CHECK(std::abs(tr_var / (4 * params.theta / k2) - 1) < 0.03);
    // E tr W^2 = 2 (2 theta) + 2 theta
    CHECK(std::abs(sq_sum / draws / (6 * params.theta / k2) - 1) < 0.03);
    CHECK(std::abs(top / draws + bottom / draws) < 0.02);

    const auto single = clt_params(4, unit(0.5));
    Philox rng1(7);
    double s = 0, s2 = 0;
    for (int i = 0; i < draws; ++i) {
      const double v = sample_limit_block(rng1, single)(0);
      s += v;
      s2 += v * v;
    }
    CHECK(std::abs((s2 / draws - (s / draws) * (s / draws)) / sigma_single(single) - 1) < 0.03);
  }

  TEST_CASE("block statistic on degenerate data") {
    const auto model = build_case1(20);
    const MatrixXd zero = MatrixXd::Zero(20, 30);
    const auto om = omega_statistic(4.0, zero, model);
    const MatrixXd expect = (30.0 / 4.0) / std::sqrt(30.0) * MatrixXd(model.d1.asDiagonal());
    CHECK((om.matrix - expect).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("block statistic against the dense resolvent") {
    Philox rng(3);
    const MatrixXd x = draw_matrix(Distribution::gaussian, 20, 30, rng);
    for (const auto& model : {single_spike(20, 2.0), build_case2(20, 0.5), build_case1(20)}) {
      for (double lam : {10.0, 5.5, 0.02, -1.0}) {
        const auto om = omega_statistic(lam, x, model);
        const MatrixXd dense = omega_dense(lam, x, model);
        CHECK((om.matrix - dense).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, dense.cwiseAbs().maxCoeff()));
        CHECK(om.asymmetry < 1e-8);
        CHECK(om.matrix == om.matrix.transpose());
      }
    }
    // single spike: (alpha / sqrt n)(tr R - u^T X R X^T u)
    const auto m1 = single_spike(20, 2.0);
    const auto om = omega_statistic(10.0, x, m1);
    const MatrixXd gamma = m1.u2() * m1.d2.asDiagonal() * m1.u2().transpose();
    const MatrixXd r = (10.0 * MatrixXd::Identity(30, 30) - x.transpose() * gamma * x / 30.0).inverse();
    const VectorXd u = m1.u1().col(0);
    const double direct = 2.0 / std::sqrt(30.0) * (r.trace() - (u.transpose() * x * r * x.transpose() * u).value());
    CHECK(om.matrix(0, 0) == Approx(direct).epsilon(1e-10));

    // single-precision instantiation
    const auto omf = omega_statistic(10.0, x.cast<float>(), build_case1(20));
    CHECK((omf.matrix - omega_dense(10.0, x, build_case1(20))).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("block statistic is linear in a spike value") {
    Philox rng(9);
    const MatrixXd x = draw_matrix(Distribution::gaussian, 20, 30, rng);
    const auto a = single_spike(20, 2.0);
    const auto b = single_spike(20, 4.0);
    // doubling the spike moves it but keeps Gamma and U1
    REQUIRE((a.u1() - b.u1()).cwiseAbs().maxCoeff() == 0.0);
    const double lam = 7.0;
    CHECK(omega_statistic(lam, x, b).matrix(0, 0) == Approx(2 * omega_statistic(lam, x, a).matrix(0, 0)).epsilon(1e-13));
  }

  TEST_CASE("singular resolvent") {
    Philox rng(4);
    const MatrixXd x = draw_matrix(Distribution::gaussian, 20, 30, rng);
    const auto model = build_case1(20);
    const MatrixXd z = model.d2.cwiseSqrt().asDiagonal() * (model.u2().transpose() * x);
    const VectorXd l = eigvals_desc(MatrixXd(z * z.transpose() / 30.0));
    CHECK_THROWS_AS(omega_statistic(l(0), x, model), DomainError);
    CHECK_THROWS_AS(omega_statistic(0.0, x, model), DomainError);
  }

  TEST_CASE("gamma statistics") {
    const auto model = build_case1(500);
    const double c_n = 0.5;
    CHECK(centering_phi(model, 0, c_n, Centering::bulk) == Approx(14.0 / 3.0).epsilon(1e-12));
    // full spectrum: other 499 eigenvalues, c' = 499/1000
    std::vector<double> others;
    for (double v : model.spec.eigenvalues)
      if (v != 4.0) others.push_back(v);
    double sum = 0;
    for (double t : others) sum += t / (4.0 - t);
    const double expect = 4.0 * (1 + 0.499 * sum / 499.0);
    CHECK(centering_phi(model, 0, c_n) == Approx(expect).epsilon(1e-12));

    VectorXd eigs(500);
    for (int k = 0; k < 4; ++k) {
      for (int r : model.spec.spikes[k].indices) eigs(r - 1) = centering_phi(model, k, c_n);
    }
    for (int r = 3; r < 197; ++r) eigs(r) = 1.0;
    const auto g = gamma_from_eigs(eigs, model, c_n);
    REQUIRE(g.groups.size() == 4);
    for (const auto& v : g.groups) CHECK(v.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.groups[1].size() == 2);
    CHECK_THROWS_AS(gamma_from_eigs(VectorXd::Ones(10), model, c_n), InvalidArgument);
  }
}
