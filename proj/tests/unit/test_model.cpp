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
#include <numbers>

#include "doctest.h"
#include "isac/config.hpp"
#include "isac/model.hpp"

using namespace isac;

namespace {

ScenarioConfig defaults() { return ScenarioConfig{}; }

}  // namespace

TEST_CASE("transition matrix structure") {
  const Mat4 g = transition_matrix(0.02);
  Mat4 expected;
  expected << 1, 0.02, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0.02, 0, 0, 0, 1;
  CHECK((g - expected).norm() == doctest::Approx(0.0));
  CHECK(transition_matrix(0.0).isIdentity());
  const Vec4 moved = transition_matrix(1.0) * Vec4(1, 2, 3, 4);
  CHECK((moved - Vec4(3, 2, 7, 4)).norm() == doctest::Approx(0.0));
}

TEST_CASE("transition matrices compose additively in time") {
  const Mat4 lhs = transition_matrix(0.3) * transition_matrix(0.45);
  CHECK((lhs - transition_matrix(0.75)).norm() < 1e-15);
}

TEST_CASE("process noise blocks") {
  const Mat4 q = process_noise_cov(1.0, 1.0);
  CHECK(q(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(q(0, 1) == doctest::Approx(0.5));
  CHECK(q(1, 1) == doctest::Approx(1.0));
  CHECK(q(2, 3) == doctest::Approx(0.5));
  CHECK(q(0, 2) == 0.0);
  CHECK(process_noise_cov(0.02, 0.0).isZero());

  // det [[t^3/3, t^2/2], [t^2/2, t]] q^2 = t^4 q^2 / 12.
  const double t = 0.02;
  const double qt = 1e-5;
  const Mat4 small = process_noise_cov(t, qt);
  const double det = small.block<2, 2>(0, 0).determinant();
  CHECK(det == doctest::Approx(std::pow(t, 4) * qt * qt / 12.0).epsilon(1e-9));
  CHECK(det == doctest::Approx(1.3333333e-18).epsilon(1e-6));

  for (double dt : {1e-3, 0.02, 0.5, 3.0}) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(process_noise_cov(dt, 2.0));
    CHECK(es.eigenvalues().minCoeff() >= -1e-15);
  }
}

TEST_CASE("evolve_state without noise") {
  ScenarioConfig cfg = defaults();
  cfg.process_noise_intensity = 0.0;
  CounterRng rng(7);
  const MotionState x{1, 0, 1, 0};
  const MotionState next = evolve_state(x, Vec4::Zero(), cfg, rng);
  CHECK((next.vec() - x.vec()).norm() == 0.0);

  const MotionState target{1.5, 2.0, 3.0, -1.0};
  const Vec4 u = control_input(target, x, cfg.slot_s);
  const MotionState hit = evolve_state(x, u, cfg, rng);
  CHECK((hit.vec() - target.vec()).norm() < 1e-14);
}

TEST_CASE("evolve_state covariance matches the process noise") {
  ScenarioConfig cfg = defaults();
  cfg.slot_s = 0.5;
  cfg.process_noise_intensity = 2.0;
  CounterRng rng = CounterRng::for_stream(11, Stream::kProcess);
  const int n = 100000;
  Mat4 acc = Mat4::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec4 d = evolve_state(MotionState{}, Vec4::Zero(), cfg, rng).vec();
    acc += d * d.transpose();
  }
  acc /= n;
  const Mat4 q = process_noise_cov(cfg.slot_s, cfg.process_noise_intensity);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double scale = std::sqrt(q(r, r) * q(c, c));
      if (q(r, c) != 0.0) {
        CHECK(acc(r, c) == doctest::Approx(q(r, c)).epsilon(0.05));
      } else {
        CHECK(std::abs(acc(r, c)) < 0.02 * scale);
      }
    }
  }
}

TEST_CASE("control input") {
  const MotionState prev{0.3, 1.0, 4.0, -2.0};
  const double dt = 0.02;
  const MotionState nominal = MotionState::from_vec(transition_matrix(dt) * prev.vec());
  CHECK(control_input(nominal, prev, dt).norm() < 1e-15);
  CHECK((control_input({1, 2, 3, 4}, MotionState{}, dt) - Vec4(1, 2, 3, 4)).norm() == 0.0);

  // x_n - x_pred = G (x_{n-1} - x_est) + z for random inputs.
  CounterRng rng(99);
  for (int k = 0; k < 50; ++k) {
    Vec4 xprev, xest, xpred, z;
    for (int i = 0; i < 4; ++i) {
      xprev(i) = rng.normal();
      xest(i) = rng.normal();
      xpred(i) = rng.normal();
      z(i) = rng.normal();
    }
    const Mat4 g = transition_matrix(dt);
    const Vec4 u = control_input(MotionState::from_vec(xpred), MotionState::from_vec(xest), dt);
    const Vec4 xn = g * xprev + u + z;
    CHECK(((xn - xpred) - (g * (xprev - xest) + z)).norm() <= 1e-12);
  }
}

TEST_CASE("sensing gain and channel constants") {
  const ScenarioConfig cfg = defaults();
  // (P_A N_sym N_t N_r / sigma^2) (sigma_rcs lambda^2 / (4 pi)^3)
  const double fp = 4.0 * std::numbers::pi;
  const double oracle = (0.1 * 1e4 * 16 * 16 / 1e-11) * (0.2 * 1e-4 / (fp * fp * fp));
  CHECK(sensing_gain(cfg) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(sensing_gain(cfg) == doctest::Approx(2.580e8).epsilon(1e-3));

  ScenarioConfig doubled = cfg;
  doubled.n_tx *= 2;
  CHECK(sensing_gain(doubled) == doctest::Approx(2.0 * sensing_gain(cfg)));
  ScenarioConfig no_rcs = cfg;
  no_rcs.rcs_m2 = 0.0;
  CHECK(sensing_gain(no_rcs) == 0.0);

  CHECK(cfg.channel_snr() == doctest::Approx(6332.6).epsilon(1e-4));
}

TEST_CASE("gamma_max") {
  ScenarioConfig cfg = defaults();
  cfg.n_tx = 64;
  cfg.y_min_m = 3.0;
  CHECK(gamma_max(cfg) == doctest::Approx(161.5).epsilon(1e-3));
  const double g = gamma_max(cfg);
  cfg.n_tx = 128;
  CHECK(gamma_max(cfg) == doctest::Approx(2.0 * g));
  cfg.altitude_m = 1e6;
  CHECK(gamma_max(cfg) < 1e-6);
}

TEST_CASE("measurement noise variances") {
  const ScenarioConfig cfg = defaults();
  const double rho = sensing_gain(cfg);
  const double h2 = 2500.0;
  const NoiseVariances v = meas_noise_vars({0.0, 15.0}, 0.5, cfg);
  const double d4 = (225.0 + h2) * (225.0 + h2);
  CHECK(v.var_angle == doctest::Approx(0.01 * d4 / (rho * 0.5)).epsilon(1e-12));
  CHECK(v.var_range == doctest::Approx(0.01 * d4 / (rho * 0.5)).epsilon(1e-12));

  const NoiseVariances v1 = meas_noise_vars({3.0, 4.0}, 0.4, cfg);
  const NoiseVariances v2 = meas_noise_vars({3.0, 4.0}, 0.8, cfg);
  CHECK(v2.var_angle == doctest::Approx(0.5 * v1.var_angle));
  CHECK(v2.var_range == doctest::Approx(0.5 * v1.var_range));

  const NoiseVariances m = meas_noise_vars({-3.0, 4.0}, 0.4, cfg);
  CHECK(m.var_angle == v1.var_angle);
  CHECK(m.var_range == v1.var_range);

  // sigma_1^2 = a1^2 (r^2 + H^2)^2 r^2 / (rho w y^2)
  CHECK(v1.var_angle == doctest::Approx(0.01 * std::pow(25.0 + h2, 2) * 25.0 / (rho * 0.4 * 16.0)));

  CHECK_THROWS_AS(meas_noise_vars({1.0, 0.0}, 0.5, cfg), SingularityError);
  CHECK_THROWS_AS(meas_noise_vars({1.0, 1e-10}, 0.5, cfg), SingularityError);
}

TEST_CASE("noiseless measurements reproduce the geometry") {
  ScenarioConfig cfg = defaults();
  cfg.meas_coeff_angle = 0.0;
  cfg.meas_coeff_range = 0.0;
  CounterRng rng(3);
  const Measurement m = measure({0, 0, 10, 0}, 0.5, cfg, rng);
  CHECK(m.azimuth_rad == doctest::Approx(std::numbers::pi / 2));
  CHECK(m.range_m == doctest::Approx(std::sqrt(2600.0)));
  CHECK(m.range_m == doctest::Approx(50.990).epsilon(1e-4));
  cfg.altitude_m = 0.0;
  const Measurement d = measure({10, 0, 10, 0}, 0.5, cfg, rng);
  CHECK(d.azimuth_rad == doctest::Approx(std::numbers::pi / 4));
  CHECK_THROWS_AS(measure({1, 0, 0, 0}, 0.5, cfg, rng), SingularityError);
}

TEST_CASE("azimuth noise variance is realised") {
  ScenarioConfig cfg = defaults();
  cfg.meas_coeff_angle = 30.0;
  cfg.meas_coeff_range = 30.0;
  CounterRng rng = CounterRng::for_stream(5, Stream::kMeasurement);
  const MotionState truth{4, 0, 9, 0};
  const NoiseVariances v = meas_noise_vars(truth.position(), 0.5, cfg);
  const double theta = std::atan2(9.0, 4.0);
  const int n = 100000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = measure(truth, 0.5, cfg, rng).azimuth_rad - theta;
    s += e * e;
  }
  CHECK(s / n == doctest::Approx(v.var_angle).epsilon(0.05));
}

TEST_CASE("dBm conversion") {
  CHECK(dbm_to_watts(-80.0) == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
  auto doc = config_to_json(Config{});
  doc.erase("noise_power_W");
  doc["noise_power_dBm"] = -80.0;
  CHECK(config_from_json(doc).scenario.noise_power_W == doctest::Approx(1e-11).epsilon(1e-12));
}

TEST_CASE("config rejects unknown keys and bad values") {
  auto doc = config_to_json(Config{});
  doc["not_a_field"] = 1;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = config_to_json(Config{});
  doc["optimizer"]["tol_x"] = 1;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = config_to_json(Config{});
  doc["outage_threshold"] = 1.5;
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = config_to_json(Config{});
  doc["n_tx"] = "sixteen";
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
  doc = config_to_json(Config{});
  apply_override(doc, "optimizer.tol_w=1e-4");
  apply_override(doc, "n_tx=64");
  const Config c = config_from_json(doc);
  CHECK(c.optimizer.tol_w == 1e-4);
  CHECK(c.scenario.n_tx == 64);
}
