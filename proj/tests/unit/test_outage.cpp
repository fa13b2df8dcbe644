// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "doctest.h"
#include "isac/ekf.hpp"
#include "isac/model.hpp"
#include "isac/outage.hpp"

using namespace isac;

namespace {

ScenarioConfig base() { return ScenarioConfig{}; }

Mat2 cov2(double xx, double xy, double yy) {
  Mat2 m;
  m << xx, xy, xy, yy;
  return m;
}

}  // namespace

TEST_CASE("beam gain") {
  CHECK(beam_gain(0.7, 0.7, 16) == doctest::Approx(16.0));
  CHECK(beam_gain_from_kappa(2.0 / 16.0, 16) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(beam_gain_from_kappa(2.0 / 16.0, 16)) < 1e-12);
  CHECK(beam_gain_from_kappa(0.5, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK(beam_gain_from_kappa(1e-14, 32) == doctest::Approx(32.0));
}

TEST_CASE("kappa") {
  CHECK(kappa({3, 4}, {3, 4}) == 0.0);
  CHECK(kappa({1, 0}, {0, 1}) == doctest::Approx(-1.0));
  CHECK(kappa({2, 5}, {-1, 3}) == doctest::Approx(-kappa({-1, 3}, {2, 5})));
  CHECK_THROWS_AS(kappa({0, 0}, {1, 1}), SingularityError);
}

TEST_CASE("Taylor curvature of the beam gain") {
  CHECK(taylor_m(16) == doctest::Approx(170.0 * std::numbers::pi * std::numbers::pi));
  CHECK(taylor_m(16) == doctest::Approx(1677.83).epsilon(1e-5));
  CHECK(taylor_m(2) == doctest::Approx(std::numbers::pi * std::numbers::pi / 4.0));
  for (int n : {2, 8, 16, 64}) {
    const double h = 1e-4;
    const double d2 = (beam_gain_from_kappa(h, n) - 2.0 * n + beam_gain_from_kappa(-h, n)) / (h * h);
    CHECK(d2 == doctest::Approx(-2.0 * taylor_m(n)).epsilon(1e-4));
    for (int i = 0; i <= 20; ++i) {
      const double k = (i - 10) / (20.0 * n);
      CHECK(std::abs(beam_gain_from_kappa(k, n) - (n - taylor_m(n) * k * k)) <= 0.02 * n);
    }
  }
}

TEST_CASE("aCOR quadratic") {
  const ScenarioConfig cfg = base();
  const double g = 50.0;
  const AcorQuadratic q0 = acor_quadratic({0.0, 10.0}, g, cfg);
  CHECK(q0.hessian(0, 1) == 0.0);
  CHECK(q0.gradient(0) == 0.0);
  CHECK(q0.gradient(1) > 0.0);
  const double m = taylor_m(cfg.n_tx);
  CHECK(q0(Vec2::Zero()) == doctest::Approx((100.0 + 2500.0) * g / (cfg.channel_snr() * m) - 16.0 / m));

  CounterRng rng(8);
  for (int k = 0; k < 200; ++k) {
    const Vec2 beam{10.0 * rng.normal(), 1.0 + 19.0 * rng.uniform_at(k)};
    const AcorQuadratic q = acor_quadratic(beam, 1.0 + 100.0 * rng.uniform_at(1000 + k), cfg);
    CHECK(q.hessian.determinant() > 0.0);
    CHECK(q.hessian(0, 1) == q.hessian(1, 0));
  }

  // The quadratic is the second-order expansion of kappa^2 + gamma d^2 / (P M) - N / M.
  const Vec2 beam{3.0, 8.0};
  const AcorQuadratic q = acor_quadratic(beam, g, cfg);
  auto exact = [&](const Vec2& dev) {
    const double k = kappa(beam + dev, beam);
    return k * k + g * ((beam + dev).squaredNorm() + 2500.0) / (cfg.channel_snr() * m) - 16.0 / m;
  };
  for (double s : {1e-2, 5e-3}) {
    const Vec2 d{s, -0.7 * s};
    CHECK(std::abs(exact(d) - q(d)) < 10.0 * s * s * s);
  }
}

TEST_CASE("aCOR bounds") {
  const ScenarioConfig cfg = base();
  const double g_edge = cfg.channel_snr() * cfg.n_tx / 2500.0;
  CHECK(acor_bounds({1.0, 10.0}, g_edge, cfg).empty);
  CHECK(acor_bounds({1.0, 10.0}, 1.01 * g_edge, cfg).empty);
  CHECK_FALSE(acor_bounds({1.0, 10.0}, 0.5 * g_edge, cfg).empty);
  CounterRng rng(9);
  for (int k = 0; k < 200; ++k) {
    const Vec2 beam{10.0 * rng.normal(), 1.0 + 19.0 * rng.uniform_at(k)};
    const double g = g_edge * (0.05 + 0.9 * rng.uniform_at(500 + k));
    const AcorBounds b = acor_bounds(beam, g, cfg);
    CHECK(b.y2 < 0.0);
    REQUIRE_FALSE(b.empty);
    CHECK(b.x_lower <= b.x_upper);
    const AcorQuadratic q = acor_quadratic(beam, g, cfg);
    const double scale = std::abs(q.constant);
    for (int i = 1; i < 10; ++i) {
      const double x = b.x_lower + (b.x_upper - b.x_lower) * i / 10.0;
      CHECK(b.y_lower(x) <= b.y_upper(x));
      CHECK(std::abs(q({x, b.y_upper(x)})) <= 1e-8 * scale);
      CHECK(std::abs(q({x, b.y_lower(x)})) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("approximated OP edge cases") {
  const ScenarioConfig cfg = base();
  const double g_edge = cfg.channel_snr() * cfg.n_tx / 2500.0;
  CHECK(approx_op({0, 10}, 1.2 * g_edge, {{0, 10}, cov2(1e-2, 0, 1e-2)}, cfg) == 1.0);
  CHECK(approx_op({0, 10}, 1.0, {{0, 10}, cov2(1e-12, 0, 1e-12)}, cfg) == 0.0);
  CHECK(approx_op({0, 10}, 1.0, {{0, 10}, cov2(1e-6, 0, 1e-6)}, cfg) < 1e-12);
  CHECK(approx_op({0, 10}, 0.0, {{0, 10}, cov2(1e-2, 0, 1e-2)}, cfg) == 0.0);
}

TEST_CASE("approximated OP against a frozen two-dimensional integration") {
  // Reference values integrate the Gaussian density over the region where the
  // quadratic is non-negative on a 3001 x 3001 grid (+-9 sigma).
  struct Row {
    double x, y, gamma;
    int n_tx;
    double brute;
  };
  const Row rows[] = {
      {2.0, 6.0, 40.0, 16, 0.9983244174629388},
      {-4.0, 9.0, 20.0, 32, 0.06294759756674617},
      {0.5, 3.0, 30.0, 16, 0.42422105312505987},
  };
  for (const auto& r : rows) {
    ScenarioConfig cfg = base();
    cfg.n_tx = r.n_tx;
    const Vec2 beam{r.x, r.y};
    const double op = approx_op(beam, r.gamma, {beam, cov2(0.04, 0.015, 0.09)}, cfg);
    CHECK(std::abs(op - r.brute) < 2e-5);
  }
}

TEST_CASE("approximated OP properties") {
  ScenarioConfig cfg = base();
  CounterRng rng(12);
  for (int k = 0; k < 100; ++k) {
    const Vec2 beam{8.0 * rng.normal(), 2.0 + 15.0 * rng.uniform_at(k)};
    const double s = 0.01 + 0.3 * rng.uniform_at(300 + k);
    const double c = 0.6 * s * s * (2.0 * rng.uniform_at(600 + k) - 1.0);
    const Mat2 lam = cov2(s * s, c, 1.3 * s * s);
    const double g = 5.0 + 35.0 * rng.uniform_at(900 + k);
    const double op = approx_op(beam, g, {beam, lam}, cfg);
    CHECK(op >= 0.0);
    CHECK(op <= 1.0);

    const Vec2 mirrored{-beam(0), beam(1)};
    const double op_m = approx_op(mirrored, g, {mirrored, cov2(s * s, -c, 1.3 * s * s)}, cfg);
    CHECK(std::abs(op_m - op) < 1e-10);

    ScenarioConfig fine = cfg;
    fine.quadrature_nodes = 2 * cfg.quadrature_nodes;
    CHECK(std::abs(approx_op(beam, g, {beam, lam}, fine) - op) < 1e-6);
  }
}

TEST_CASE("Monte Carlo OP oracle") {
  ScenarioConfig cfg = base();
  const Vec2 beam{0.0, 15.0};
  const PositionGaussian pos{beam, cov2(1e-4, 0, 1e-4)};
  CounterRng rng = CounterRng::for_stream(21, Stream::kMonteCarlo);
  CHECK(mc_op(beam, 0.0, pos, cfg, 1000, rng) == 0.0);
  const double huge = cfg.channel_snr() * cfg.n_tx / (cfg.altitude_m * cfg.altitude_m) * 1.0001;
  CHECK(mc_op(beam, huge, pos, cfg, 1000, rng) == 1.0);

  const double g = 0.5 * cfg.channel_snr() * 16.0 / (225.0 + 2500.0);
  const double mc = mc_op(beam, g, pos, cfg, 1000000, rng);
  CHECK(std::abs(approx_op(beam, g, pos, cfg) - mc) <= 0.01);

  // Assumption-1 regime with a visible OP.
  const PositionGaussian wide{beam, cov2(0.04, 0.01, 0.05)};
  for (double gg : {20.0, 30.0, 35.0}) {
    const double a = approx_op(beam, gg, wide, cfg);
    const double m = mc_op(beam, gg, wide, cfg, 200000, rng);
    CHECK(std::abs(a - m) <= 0.03);
  }
}

TEST_CASE("Monte Carlo OP does not depend on the worker count") {
  ScenarioConfig cfg = base();
  const Vec2 beam{1.0, 7.0};
  const PositionGaussian pos{beam, cov2(0.05, 0.01, 0.04)};
  CounterRng rng(77);
  setenv("ISAC_WORKERS", "1", 1);
  const double one = mc_op(beam, 30.0, pos, cfg, 50000, rng);
  setenv("ISAC_WORKERS", "3", 1);
  const double three = mc_op(beam, 30.0, pos, cfg, 50000, rng);
  unsetenv("ISAC_WORKERS");
  CHECK(one == three);
}

TEST_CASE("outage capacity") {
  CHECK(outage_capacity({1.0, 1.0}, 0.3) == doctest::Approx(1.0));
  CHECK(outage_capacity({3.0, 100.0}, 1.0) == doctest::Approx(2.0));
  CHECK(outage_capacity({3.1, 1.0}, 0.5) > outage_capacity({3.0, 1.0}, 0.5));
  CHECK(outage_capacity({3.0, 1.1}, 0.5) > outage_capacity({3.0, 1.0}, 0.5));
}

TEST_CASE("maximum OP constraint") {
  ScenarioConfig cfg = base();
  cfg.meas_coeff_angle = 3.0;
  cfg.meas_coeff_range = 3.0;
  const PlanningContext ctx({0.2, 0.0, 7.0, 0.0}, Mat4::Identity() * 1e-2, cfg);
  const Vec2 beam{0.2, 7.0};
  const SnrTargets t{25.0, 25.0};
  double prev = 2.0;
  for (int i = 1; i <= 10; ++i) {
    const double w = 0.1 * i;
    const StageOps ops = stage_ops(beam, w, t, ctx);
    CHECK(ops.estimation <= prev + 1e-12);
    CHECK(ops.estimation <= ops.prediction + 1e-12);
    prev = ops.estimation;
    CHECK(ops.prediction == doctest::Approx(stage_ops(beam, 0.3, t, ctx).prediction));
  }
  const double c = max_op_constraint(beam, 0.5, t, ctx);
  const StageOps ops = stage_ops(beam, 0.5, t, ctx);
  CHECK(c == doctest::Approx(std::max(ops.prediction, ops.estimation) - cfg.outage_threshold));

  // Same covariance and target in both stages give the same OP.
  const Mat2 lam = ctx.prediction_cov();
  CHECK(approx_op(beam, 25.0, {beam, lam}, cfg) == ops.prediction);
}
