#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vrsplit/errors.hpp"
#include "vrsplit/estimators.hpp"

using namespace vrsplit;
using testing::max_abs;
using testing::randn;

namespace {

VrEstimator warmed(const GeProblem& prob, EstimatorConfig cfg, Rng& rng, int steps) {
  VrEstimator est(prob, std::move(cfg));
  est.initialize(randn(prob.dim(), rng), rng);
  for (int k = 0; k < steps; ++k) est.estimate(randn(prob.dim(), rng), rng);
  return est;
}

}  // namespace

TEST_CASE("estimator names") {
  CHECK(estimator_kind_from_string("svrg") == EstimatorKind::Lsvrg);
  CHECK(estimator_kind_from_string("lsarah") == EstimatorKind::Lsarah);
  CHECK(estimator_kind_from_string("hsgd") == EstimatorKind::Hsgd);
  CHECK(std::string(to_string(EstimatorKind::Saga)) == "saga");
  CHECK_THROWS_AS(estimator_kind_from_string("sag"), ConfigError);
}

TEST_CASE("unbiasedness by exhaustive enumeration, b = 1") {
  for (Index n : {4, 5}) {
    Rng rng = make_stream(10 + static_cast<std::uint64_t>(n), 0);
    const GeProblem prob = testing::random_finite_sum(n, 3, rng);
    SUBCASE("L-SVRG") {
      // refresh is decided before the batch; enumerate each branch separately
      const VrEstimator est = warmed(prob, fixed_config(EstimatorKind::Lsvrg, 1, 0.3), rng, 4);
      const Vec x = randn(3, rng);
      for (bool refresh : {false, true}) {
        Vec mean = Vec::Zero(3);
        for (Index i = 0; i < n; ++i) {
          VrEstimator frozen = est;
          Draw d;
          d.k = est.step() + 1;
          d.refresh = refresh;
          d.batch = {i};
          mean += frozen.estimate_with(x, d);
        }
        mean /= static_cast<double>(n);
        CHECK(max_abs(mean - prob.full(x)) <= 1e-12);
      }
    }
    SUBCASE("SAGA") {
      const VrEstimator est = warmed(prob, fixed_config(EstimatorKind::Saga, 1, 0.0), rng, 6);
      const Vec x = randn(3, rng);
      Vec mean = Vec::Zero(3);
      for (Index i = 0; i < n; ++i) {
        VrEstimator frozen = est;
        Draw d;
        d.k = est.step() + 1;
        d.batch = {i};
        mean += frozen.estimate_with(x, d);
      }
      mean /= static_cast<double>(n);
      CHECK(max_abs(mean - prob.full(x)) <= 1e-12);
    }
  }
}

TEST_CASE("L-SVRG at its snapshot returns the snapshot mean exactly") {
  Rng rng = make_stream(1, 0);
  const GeProblem prob = testing::random_finite_sum(6, 4, rng);
  VrEstimator est(prob, fixed_config(EstimatorKind::Lsvrg, 3, 0.0));
  const Vec x0 = randn(4, rng);
  est.initialize(x0, rng);
  const Vec f = est.estimate(x0, rng);
  CHECK(f == est.snapshot_F());
  CHECK(est.snapshot_x() == x0);
}

TEST_CASE("L-SVRG refresh moves the snapshot to the previous iterate") {
  Rng rng = make_stream(2, 0);
  const GeProblem prob = testing::random_finite_sum(5, 3, rng);
  VrEstimator est(prob, fixed_config(EstimatorKind::Lsvrg, 2, 1.0));
  const Vec x0 = randn(3, rng), x1 = randn(3, rng), x2 = randn(3, rng);
  est.initialize(x0, rng);
  est.estimate(x1, rng);
  CHECK(est.snapshot_x() == x0);
  est.estimate(x2, rng);
  CHECK(est.snapshot_x() == x1);
  CHECK(max_abs(est.snapshot_F() - prob.full(x1)) <= 1e-14);
}

TEST_CASE("SARAH with b = n tracks F x") {
  Rng rng = make_stream(3, 0);
  const GeProblem prob = testing::random_finite_sum(7, 3, rng);
  VrEstimator est(prob, fixed_config(EstimatorKind::Lsarah, 7, 0.0));
  est.initialize(randn(3, rng), rng);
  for (int k = 0; k < 50; ++k) {
    const Vec x = randn(3, rng);
    CHECK(max_abs(est.estimate(x, rng) - prob.full(x)) <= 1e-12);
  }
}

TEST_CASE("HSGD reductions") {
  Rng setup = make_stream(4, 0);
  const GeProblem prob = testing::random_finite_sum(9, 3, setup);
  SUBCASE("tau = 0 follows SARAH bitwise on a shared stream") {
    EstimatorConfig h = fixed_config(EstimatorKind::Hsgd, 3, 0.0);
    h.tau = [](Index) { return 0.0; };
    VrEstimator a(prob, fixed_config(EstimatorKind::Lsarah, 3, 0.0)), b(prob, h);
    Rng ra = make_stream(9, 1), rb = make_stream(9, 1);
    Vec x = randn(3, setup);
    CHECK(a.initialize(x, ra) == b.initialize(x, rb));
    for (int k = 0; k < 100; ++k) {
      x += randn(3, setup, 0.1);
      CHECK(a.estimate(x, ra) == b.estimate(x, rb));
    }
    CHECK(a.oracle_calls() == b.oracle_calls());
  }
  SUBCASE("tau = 1 is the hat-batch mean") {
    EstimatorConfig h = fixed_config(EstimatorKind::Hsgd, 4, 0.0);
    h.tau = [](Index) { return 1.0; };
    VrEstimator est(prob, h);
    Rng rng = make_stream(9, 2);
    est.initialize(randn(3, setup), rng);
    for (int k = 0; k < 20; ++k) {
      const Vec x = randn(3, setup);
      const Draw d = est.draw(rng);
      CHECK(d.batch.empty());
      REQUIRE(d.hat_batch.size() == 4);
      Vec ref = Vec::Zero(3);
      for (Index i : d.hat_batch) ref += prob.component(i, x);
      ref /= 4.0;
      CHECK(max_abs(est.estimate_with(x, d) - ref) <= 1e-15 * (1.0 + max_abs(ref)));
    }
  }
  SUBCASE("mixing weight schedule") {
    const ScheduleConstants c;
    const EstimatorConfig cfg = build_schedule(EstimatorKind::Hsgd, 100, 0.5, c);
    const double mu = c.mu, r = 2.0 + 1.0 / mu, theta = 0.01;
    CHECK(cfg.theta == doctest::Approx(theta));
    for (Index k : {1, 2, 10, 500}) {
      const double t = mu * (k + r), tp = mu * (k - 1 + r);
      const double expect = 1.0 - std::sqrt((1.0 - theta) * tp * (tp - 1.0) / (t * (t - 1.0)));
      CHECK(cfg.tau(k) == doctest::Approx(expect).epsilon(1e-14));
      CHECK(cfg.tau(k) >= 0.0);
      CHECK(cfg.tau(k) <= 1.0);
    }
  }
}

TEST_CASE("SAGA table and running mean") {
  Rng rng = make_stream(5, 0);
  const Index n = 6;
  const GeProblem prob = testing::random_finite_sum(n, 3, rng);
  VrEstimator est(prob, fixed_config(EstimatorKind::Saga, 2, 0.0));
  std::vector<Vec> last_point(static_cast<std::size_t>(n));
  const Vec x0 = randn(3, rng);
  est.initialize(x0, rng);
  for (auto& p : last_point) p = x0;
  for (int k = 0; k < 200; ++k) {
    const Vec x = randn(3, rng);
    const Draw d = est.draw(rng);
    est.estimate_with(x, d);
    for (Index i : d.batch) last_point[static_cast<std::size_t>(i)] = x;
    const Vec colmean = est.saga_table().colwise().mean().transpose();
    CHECK(max_abs(est.saga_mean() - colmean) <= 1e-10);
    for (Index i = 0; i < n; ++i)
      CHECK(max_abs(est.saga_table().row(i).transpose() - prob.component(i, last_point[static_cast<std::size_t>(i)])) ==
            0.0);
  }
}

TEST_CASE("zero variance at stationarity") {
  Rng rng = make_stream(6, 0);
  const GeProblem prob = testing::random_finite_sum(5, 3, rng);
  const Vec x = randn(3, rng);
  for (EstimatorKind kind : {EstimatorKind::Lsvrg, EstimatorKind::Lsarah, EstimatorKind::Saga}) {
    VrEstimator est(prob, fixed_config(kind, 2, 0.0));
    est.initialize(x, rng);
    for (int k = 0; k < 10; ++k) CHECK(max_abs(est.estimate(x, rng) - prob.full(x)) <= 1e-14);
  }
}

TEST_CASE("deterministic replay and oracle accounting") {
  Rng setup = make_stream(7, 0);
  const Index n = 8, b = 3;
  const GeProblem prob = testing::random_finite_sum(n, 2, setup);
  std::vector<Vec> xs;
  for (int k = 0; k < 40; ++k) xs.push_back(randn(2, setup));
  for (EstimatorKind kind : {EstimatorKind::Lsvrg, EstimatorKind::Saga, EstimatorKind::Lsarah, EstimatorKind::Hsgd}) {
    CAPTURE(to_string(kind));
    EstimatorConfig cfg = fixed_config(kind, b, 0.25);
    if (kind == EstimatorKind::Hsgd) cfg.tau = [](Index k) { return 1.0 / static_cast<double>(k + 1); };
    VrEstimator a(prob, cfg), c(prob, cfg);
    Rng ra = make_stream(3, 3), rc = make_stream(3, 3), rd = make_stream(3, 3);
    a.initialize(xs[0], ra);
    c.initialize(xs[0], rc);
    CHECK(a.oracle_calls() == n);
    VrEstimator shadow = a;  // replays draws to predict the count
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const Draw d = shadow.draw(rd);
      long long expect = a.oracle_calls();
      switch (kind) {
        case EstimatorKind::Lsvrg: expect += 2 * b + (d.refresh ? n : 0); break;
        case EstimatorKind::Saga: expect += b; break;
        case EstimatorKind::Lsarah: expect += d.refresh ? n : 2 * b; break;
        case EstimatorKind::Hsgd:
          expect += static_cast<long long>(2 * d.batch.size() + d.hat_batch.size());
          break;
        default: break;
      }
      shadow.estimate_with(xs[k], d);
      CHECK(a.estimate(xs[k], ra) == c.estimate(xs[k], rc));
      CHECK(a.oracle_calls() == expect);
    }
  }
}

TEST_CASE("draw order and state errors") {
  Rng rng = make_stream(8, 0);
  const GeProblem prob = testing::random_finite_sum(4, 2, rng);
  VrEstimator est(prob, fixed_config(EstimatorKind::Lsarah, 2, 0.5));
  CHECK_THROWS_AS(est.estimate(Vec::Zero(2), rng), StateError);
  est.initialize(Vec::Zero(2), rng);
  Draw d = est.draw(rng);
  d.k += 1;
  CHECK_THROWS_AS(est.estimate_with(Vec::Zero(2), d), StateError);
  CHECK_THROWS_AS(est.initialize(Vec::Zero(3), rng), DimensionError);
  // b >= n uses the full index set without touching the stream
  VrEstimator full(prob, fixed_config(EstimatorKind::Saga, 9, 0.0));
  full.initialize(Vec::Zero(2), rng);
  Rng a = make_stream(1, 1), b = a;
  const Draw all = full.draw(a);
  CHECK(all.batch == std::vector<Index>{0, 1, 2, 3});
  CHECK(a == b);
  CHECK_THROWS_AS(fixed_config(EstimatorKind::Lsvrg, 0, 0.5), ConfigError);
  CHECK_THROWS_AS(fixed_config(EstimatorKind::Lsvrg, 1, 1.5), ConfigError);
}

TEST_CASE("practical presets") {
  const ScheduleConstants c;
  SUBCASE("SARAH, n = 49749") {
    const EstimatorConfig s = build_schedule(EstimatorKind::Lsarah, 49749, 0.0, c);
    CHECK(s.batch(1) == 111);
    CHECK(s.probability(1) == doctest::Approx(2.2417e-3).epsilon(1e-4));
    CHECK(s.probability(7) == s.probability(1));
  }
  SUBCASE("SVRG, n = 1000") {
    const EstimatorConfig s = build_schedule(EstimatorKind::Lsvrg, 1000, 0.0, c);
    CHECK(s.batch(1) == 50);
    CHECK(s.probability(1) == doctest::Approx(0.05).epsilon(1e-12));
    const EstimatorConfig h = build_schedule(EstimatorKind::Lsvrg, 1000, 0.0, c, SchedulePreset::PracticalHalved);
    CHECK(h.batch(1) == 25);
    CHECK(h.probability(1) == doctest::Approx(0.025).epsilon(1e-12));
  }
  SUBCASE("SAGA and HSGD") {
    CHECK(build_schedule(EstimatorKind::Saga, 1000, 0.0, c).batch(3) == 50);
    const EstimatorConfig h = build_schedule(EstimatorKind::Hsgd, 500, 0.0, c);
    CHECK(h.batch(1) == 11);
    CHECK(h.theta == doctest::Approx(1.0 / 500.0));
  }
  SUBCASE("n = 1 degenerates to the deterministic case") {
    for (EstimatorKind kind : {EstimatorKind::Lsvrg, EstimatorKind::Lsarah}) {
      const EstimatorConfig s = build_schedule(kind, 1, 0.0, c);
      CHECK(s.batch(1) == 1);
      CHECK(s.probability(1) == 1.0);
    }
  }
}

TEST_CASE("theory schedules") {
  const ScheduleConstants c;
  const double mu = c.mu, r = 2.0 + 1.0 / mu;
  SUBCASE("SVRG piecewise probability") {
    const Index n = 100000;
    const double omega = 1.0 / 3.0, nw = std::pow(static_cast<double>(n), omega);
    const EstimatorConfig s = build_schedule(EstimatorKind::Lsvrg, n, omega, c, SchedulePreset::Theory);
    CHECK(s.batch(1) == static_cast<Index>(std::floor(0.5 * std::pow(static_cast<double>(n), 2.0 * omega) + 1e-9)));
    const double k0 = std::floor(4.0 * 0.5 * nw - r + 1.0 + 1.0 / mu + 1e-9);
    const double early = 2.0 / (0.5 * nw) + 4.0 * mu / (mu * (5.0 + r - 1.0) - 1.0);
    CHECK(s.probability(5) == doctest::Approx(std::min(early, 1.0)).epsilon(1e-12));
    CHECK(s.probability(static_cast<Index>(k0) + 1) == doctest::Approx(3.0 / (0.5 * nw)).epsilon(1e-12));
  }
  SUBCASE("SAGA piecewise batch is clamped to n") {
    const EstimatorConfig s = build_schedule(EstimatorKind::Saga, 64, 0.0, c, SchedulePreset::Theory);
    for (Index k : {1, 2, 50, 1000}) {
      CHECK(s.batch(k) >= 1);
      CHECK(s.batch(k) <= 64);
    }
    CHECK(s.batch(100000) == static_cast<Index>(std::floor(3.0 * 0.5 * 16.0 + 1e-9)));
  }
  SUBCASE("SARAH with omega = 1/2") {
    const Index n = 10000;
    const EstimatorConfig s = build_schedule(EstimatorKind::Lsarah, n, 0.5, c, SchedulePreset::Theory);
    CHECK(s.batch(1) == 50);
    CHECK(s.probability(100000) == doctest::Approx(2.0 / (0.5 * 100.0)).epsilon(1e-12));
    for (Index k : {0, 1, 3, 1000}) {
      CHECK(s.probability(k) >= 1e-6);
      CHECK(s.probability(k) <= 1.0);
    }
  }
  SUBCASE("small n records warnings instead of failing") {
    const EstimatorConfig s = build_schedule(EstimatorKind::Lsvrg, 10, 1.0 / 3.0, c, SchedulePreset::Theory);
    CHECK_FALSE(s.warnings.empty());
  }
  CHECK_THROWS_AS(build_schedule(EstimatorKind::Lsvrg, 0, 0.0, c), ConfigError);
}
