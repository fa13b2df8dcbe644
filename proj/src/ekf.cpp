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

#include "isac/ekf.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

namespace isac {

namespace {

Mat4 symmetrise(const Mat4& m) { return 0.5 * (m + m.transpose()); }

// Wraps an angle difference into (-pi, pi].
double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace

Mat4 predict_mse(const Mat4& prev_mse, const ScenarioConfig& cfg) {
  const Mat4 g = transition_matrix(cfg.slot_s);
  return symmetrise(g * prev_mse * g.transpose() +
                    process_noise_cov(cfg.slot_s, cfg.process_noise_intensity));
}

Mat24 jacobian(const MotionState& predicted, double altitude_m) {
  const double x = predicted.x_m;
  const double y = predicted.y_m;
  const double r2 = x * x + y * y;
  if (!(r2 > 0.0)) throw SingularityError("measurement Jacobian is undefined at the origin");
  const double d = std::sqrt(r2 + altitude_m * altitude_m);
  Mat24 h = Mat24::Zero();
  h(0, 0) = -y / r2;
  h(0, 2) = x / r2;
  h(1, 0) = x / d;
  h(1, 2) = y / d;
  return h;
}

Mat42 kalman_gain(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov) {
  const Mat2 s = meas_cov + jac * prior_mse * jac.transpose();
  const double det = s.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-300 * std::max(1.0, s.cwiseAbs().maxCoeff())) {
    throw NumericalError("innovation covariance is not invertible");
  }
  return prior_mse * jac.transpose() * s.inverse();
}

Mat2 diag_cov(const NoiseVariances& v) {
  Mat2 q = Mat2::Zero();
  q(0, 0) = v.var_angle;
  q(1, 1) = v.var_range;
  return q;
}

Mat4 posterior_mse(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov) {
  const Mat42 k = kalman_gain(prior_mse, jac, meas_cov);
  return symmetrise((Mat4::Identity() - k * jac) * prior_mse);
}

Mat4 posterior_mse_information(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov,
                               bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  Eigen::FullPivLU<Mat4> lu(prior_mse);
  if (!lu.isInvertible()) {
    std::cerr << "warning: prior MSE is singular, using the covariance form\n";
    if (used_fallback) *used_fallback = true;
    return posterior_mse(prior_mse, jac, meas_cov);
  }
  const Mat4 info = jac.transpose() * meas_cov.inverse() * jac + lu.inverse();
  return symmetrise(info.inverse());
}

EkfState update(const PredictionBundle& bundle, const Measurement& meas, double altitude_m) {
  const Mat42 k = kalman_gain(bundle.prior_mse, bundle.jacobian, bundle.meas_cov);
  const Vec2 predicted_meas = measurement_map(bundle.predicted.position(), altitude_m);
  Vec2 innovation{wrap_angle(meas.azimuth_rad - predicted_meas(0)), meas.range_m - predicted_meas(1)};
  EkfState out;
  out.estimate = MotionState::from_vec(bundle.predicted.vec() + k * innovation);
  out.mse = symmetrise((Mat4::Identity() - k * bundle.jacobian) * bundle.prior_mse);
  return out;
}

Mat4 planned_posterior_mse(const Mat4& prior_mse, const MotionState& predicted, double w,
                           const ScenarioConfig& cfg) {
  const Mat24 h = jacobian(predicted, cfg.altitude_m);
  const Mat2 q = diag_cov(meas_noise_vars(predicted.position(), w, cfg));
  try {
    return posterior_mse(prior_mse, h, q);
  } catch (const NumericalError&) {
    // Noise-free measurement of a degenerate prior: the pseudo-inverse gain
    // is the limit of the regular one.
    const Mat2 s = q + h * prior_mse * h.transpose();
    const Mat42 k = prior_mse * h.transpose() * s.completeOrthogonalDecomposition().pseudoInverse();
    return symmetrise((Mat4::Identity() - k * h) * prior_mse);
  }
}

Mat2 position_marginal(const Mat4& mse) {
  Mat2 m;
  m << mse(0, 0), mse(0, 2), mse(2, 0), mse(2, 2);
  return m;
}

}  // namespace isac
