#include "doctest.h"

#include <cmath>
#include <numeric>

#include "spikelab/error.hpp"
#include "spikelab/mc.hpp"

using namespace spikelab;
using doctest::Approx;

namespace {

ExperimentConfig small_case1(int reps, int threads) {
  ExperimentConfig cfg;
  cfg.model = build_case1(60);
  cfg.n = 120;
  cfg.reps = reps;
  cfg.seed = 99;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST_SUITE("mc") {
  TEST_CASE("ks distance") {
    CHECK(ks_distance({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(ks_distance({1, 2, 3}, {4, 5, 6}) == 1.0);
    CHECK(ks_distance({1, 2, 3}, {2, 3, 4}) == Approx(1.0 / 3.0));
    CHECK(ks_distance({0.5}, {0.1, 0.9}) == Approx(0.5));
    CHECK_THROWS_AS(ks_distance({}, {1.0}), InvalidArgument);
    CHECK(ks_critical(0.01, 1000, 1000) == Approx(0.07279).epsilon(1e-3));
    CHECK_THROWS_AS(ks_critical(0.0, 10, 10), InvalidArgument);
  }

  TEST_CASE("freedman-diaconis bins") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 0.0);
    const auto h = freedman_diaconis(v);
    // IQR 49.5 over a range of 99 with n = 100: width 21.33, five bins
    CHECK(h.counts.size() == 5);
    CHECK(h.edges.size() == 6);
    CHECK(h.edges.front() == 0.0);
    CHECK(h.edges.back() == 99.0);
    CHECK(std::accumulate(h.counts.begin(), h.counts.end(), 0) == 100);
    const auto flat = freedman_diaconis({2.0, 2.0, 2.0});
    CHECK(flat.counts == std::vector<int>{3});
    CHECK(freedman_diaconis({}).counts.empty());
  }

  TEST_CASE("single replication") {
    const auto s = run_clt_experiment(small_case1(1, 1));
    CHECK(s.completed == 1);
    REQUIRE(s.groups.size() == 4);
    for (const auto& g : s.groups) {
      CHECK_FALSE(g.variance_defined);
      CHECK(g.samples.rows() == 1);
      CHECK(g.samples.cols() == g.multiplicity);
    }
    CHECK(s.groups[1].multiplicity == 2);
  }

  TEST_CASE("thread count does not change results") {
    auto one = small_case1(7, 1);
    auto three = small_case1(7, 3);
    one.record_omega = three.record_omega = true;
    const auto a = run_clt_experiment(one);
    const auto b = run_clt_experiment(three);
    REQUIRE(a.groups.size() == b.groups.size());
    for (std::size_t t = 0; t < a.groups.size(); ++t) {
      CHECK(a.groups[t].samples == b.groups[t].samples);
      CHECK(a.groups[t].omega == b.groups[t].omega);
      CHECK(a.groups[t].variance_defined);
    }
    CHECK(a.groups[1].omega.cols() == 4);
    CHECK(replication_data(one, 3) == replication_data(three, 3));
    CHECK(replication_data(one, 3) != replication_data(one, 4));
  }

  TEST_CASE("summary statistics") {
    auto cfg = small_case1(20, 2);
    cfg.targets = {1};
    const auto s = run_clt_experiment(cfg);
    REQUIRE(s.groups.size() == 1);
    const auto& g = s.groups[0];
    CHECK(g.group == 1);
    CHECK(g.alpha == 3.0);
    CHECK(g.mean(0) == Approx(g.samples.col(0).mean()).epsilon(1e-12));
    const VectorXd sums = g.samples.rowwise().sum();
    const double var = (sums.array() - sums.mean()).square().sum() / 19.0;
    CHECK(g.trace_variance == Approx(var).epsilon(1e-10));
    CHECK(g.covariance.trace() <= g.trace_variance + 2 * std::abs(g.covariance(0, 1)) + 1e-12);
    CHECK(std::accumulate(g.histogram.counts.begin(), g.histogram.counts.end(), 0) == 20);
  }

  TEST_CASE("universality plumbing") {
    auto a = small_case1(30, 1);
    a.targets = {0};
    const auto same = universality_check(a, a);
    REQUIRE(same.ks.size() == 1);
    CHECK(same.ks[0] == 0.0);
    CHECK(same.ks_pass[0]);
    CHECK(same.kind == "universality");

    auto b = a;
    b.model = build_case2(60, 0.5);
    CHECK_THROWS_AS(universality_check(a, b), InvalidArgument);
    auto c = a;
    c.n = 130;
    CHECK_THROWS_AS(universality_check(a, c), InvalidArgument);
  }

  TEST_CASE("null model detects nothing") {
    ExperimentConfig cfg;
    cfg.model = make_model(SpectrumSpec::make(std::vector<double>(200, 1.0), {}), MatrixXd::Identity(200, 200),
                           DesignCase::custom);
    cfg.n = 1000;
    cfg.reps = 100;
    cfg.seed = 11;
    DetectionConfig det;
    det.c = cfg.c();
    const auto s = run_detection_experiment(cfg, det);
    REQUIRE(s.detection.has_value());
    CHECK(s.detection->mode() == 0);
    double total = 0;
    double mean = 0;
    for (const auto& [m, f] : s.detection->frequency) {
      total += f;
      mean += m * f;
    }
    CHECK(total == Approx(1.0));
    // the lowest eigenvalue fires in about 40% of runs
    CHECK(mean < 20.0);
    CHECK(s.detection->location_accuracy == s.detection->frequency.at(0));
  }

  TEST_CASE("validation") {
    auto cfg = small_case1(0, 1);
    CHECK_THROWS_AS(run_clt_experiment(cfg), InvalidArgument);
    cfg.reps = 2;
    cfg.targets = {9};
    CHECK_THROWS_AS(run_clt_experiment(cfg), InvalidArgument);
    cfg.targets = {};
    cfg.threads = 0;
    CHECK_THROWS_AS(run_clt_experiment(cfg), InvalidArgument);
  }
}
