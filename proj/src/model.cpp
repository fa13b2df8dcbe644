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

#include "isac/model.hpp"

#include <cmath>
#include <numbers>

namespace isac {

Mat4 transition_matrix(double slot_s) {
  Mat4 g = Mat4::Identity();
  g(0, 1) = slot_s;
  g(2, 3) = slot_s;
  return g;
}

Mat4 process_noise_cov(double slot_s, double intensity) {
  const double t = slot_s;
  Mat2 block;
  block << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  block *= intensity;
  Mat4 q = Mat4::Zero();
  q.block<2, 2>(0, 0) = block;
  q.block<2, 2>(2, 2) = block;
  return q;
}

MotionState evolve_state(const MotionState& prev, const Vec4& control, const ScenarioConfig& cfg,
                         CounterRng& rng) {
  const double t = cfg.slot_s;
  const double q = cfg.process_noise_intensity;
  // Closed-form Cholesky factor of the 2x2 block [[t^3/3, t^2/2], [t^2/2, t]] * q.
  const double l11 = std::sqrt(q * t * t * t / 3.0);
  const double l21 = std::sqrt(3.0 * q * t) / 2.0;
  const double l22 = std::sqrt(q * t) / 2.0;
  const double n1 = rng.normal();
  const double n2 = rng.normal();
  const double n3 = rng.normal();
  const double n4 = rng.normal();
  Vec4 noise{l11 * n1, l21 * n1 + l22 * n2, l11 * n3, l21 * n3 + l22 * n4};
  const Vec4 next = transition_matrix(t) * prev.vec() + control + noise;
  return MotionState::from_vec(next);
}

Vec4 control_input(const MotionState& predicted, const MotionState& prev_estimate, double slot_s) {
  return predicted.vec() - transition_matrix(slot_s) * prev_estimate.vec();
}

MotionState planned_state(const Vec2& beam_pos, const MotionState& prev_estimate, double slot_s) {
  return {beam_pos(0), (beam_pos(0) - prev_estimate.x_m) / slot_s, beam_pos(1),
          (beam_pos(1) - prev_estimate.y_m) / slot_s};
}

double sensing_gain(const ScenarioConfig& cfg) {
  const double four_pi = 4.0 * std::numbers::pi;
  const double link = cfg.transmit_power_W * cfg.matched_filter_gain * cfg.n_tx * cfg.n_rx /
                      cfg.noise_power_W;
  return link * (cfg.rcs_m2 * cfg.wavelength_m * cfg.wavelength_m / (four_pi * four_pi * four_pi));
}

NoiseVariances meas_noise_vars(const Vec2& pos, double w, const ScenarioConfig& cfg) {
  const double x = pos(0);
  const double y = pos(1);
  if (std::abs(y) < kSingularGuard) {
    throw SingularityError("azimuth noise variance is unbounded on the array axis (y = 0)");
  }
  const double h2 = cfg.altitude_m * cfg.altitude_m;
  const double r2 = x * x + y * y;
  const double d4 = (r2 + h2) * (r2 + h2);
  const double denom = sensing_gain(cfg) * w;
  const double a1 = cfg.meas_coeff_angle;
  const double a2 = cfg.meas_coeff_range;
  return {a1 * a1 * d4 * r2 / (denom * y * y), a2 * a2 * d4 / denom};
}

Vec2 measurement_map(const Vec2& pos, double altitude_m) {
  const double x = pos(0);
  const double y = pos(1);
  return {std::atan2(y, x), std::sqrt(x * x + y * y + altitude_m * altitude_m)};
}

Measurement measure(const MotionState& truth, double w, const ScenarioConfig& cfg, CounterRng& rng) {
  const Vec2 pos = truth.position();
  const NoiseVariances v = meas_noise_vars(pos, w, cfg);
  const Vec2 h = measurement_map(pos, cfg.altitude_m);
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  Measurement m;
  m.azimuth_rad = h(0) + std::sqrt(v.var_angle) * z1;
  m.range_m = h(1) + std::sqrt(v.var_range) * z2;
  m.below_altitude = m.range_m < cfg.altitude_m;
  return m;
}

double gamma_max(const ScenarioConfig& cfg) {
  return cfg.channel_snr() * cfg.n_tx /
         (cfg.y_min_m * cfg.y_min_m + cfg.altitude_m * cfg.altitude_m);
}

}  // namespace isac
