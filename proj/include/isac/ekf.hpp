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

#pragma once

#include "isac/config.hpp"
#include "isac/model.hpp"
#include "isac/types.hpp"

namespace isac {

struct EkfState {
  MotionState estimate{};
  Mat4 mse = Mat4::Zero();
};

/// Everything the update step needs, assembled before the measurement arrives.
struct PredictionBundle {
  MotionState predicted{};
  Mat4 prior_mse = Mat4::Zero();
  Mat24 jacobian = Mat24::Zero();
  Mat2 meas_cov = Mat2::Identity();
};

/// G M G^T + Q_p, symmetrised.
Mat4 predict_mse(const Mat4& prev_mse, const ScenarioConfig& cfg);

/// Jacobian of the measurement map at the predicted position. Velocity
/// columns are zero. Throws SingularityError at the origin.
Mat24 jacobian(const MotionState& predicted, double altitude_m);

/// M_p H^T (Q_m + H M_p H^T)^-1. Throws NumericalError if the innovation
/// covariance cannot be inverted.
Mat42 kalman_gain(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov);

Mat2 diag_cov(const NoiseVariances& v);

/// Covariance-form update: estimate from the innovation and (I - K H) M_p,
/// symmetrised.
EkfState update(const PredictionBundle& bundle, const Measurement& meas, double altitude_m);

/// Estimation MSE only (no measurement), covariance form.
Mat4 posterior_mse(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov);

/// Information form (H^T Q_m^-1 H + M_p^-1)^-1. Falls back to the covariance
/// form when M_p is singular; `used_fallback` reports that.
Mat4 posterior_mse_information(const Mat4& prior_mse, const Mat24& jac, const Mat2& meas_cov,
                               bool* used_fallback = nullptr);

/// Estimation MSE the planner expects for a candidate predicted state:
/// Jacobian and noise variances are both evaluated at the prediction.
Mat4 planned_posterior_mse(const Mat4& prior_mse, const MotionState& predicted, double w,
                           const ScenarioConfig& cfg);

/// Position marginal [[M11, M13], [M31, M33]] (zero-based indices 0 and 2).
Mat2 position_marginal(const Mat4& mse);

}  // namespace isac
