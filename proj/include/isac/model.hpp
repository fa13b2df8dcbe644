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

// Constant-velocity UAV kinematics, the monostatic radar measurement model
// and the radiometric constants shared by the tracker and the optimizer.

#include "isac/config.hpp"
#include "isac/rng.hpp"
#include "isac/types.hpp"

namespace isac {

struct Measurement {
  double azimuth_rad = 0.0;
  double range_m = 0.0;
  // Set when noise pushed the range below the flight altitude.
  bool below_altitude = false;
};

struct NoiseVariances {
  double var_angle = 0.0;
  double var_range = 0.0;
};

Mat4 transition_matrix(double slot_s);
Mat4 process_noise_cov(double slot_s, double intensity);

/// G * prev + control + z, z ~ N(0, Q_p). The rng is advanced by two normal pairs.
MotionState evolve_state(const MotionState& prev, const Vec4& control, const ScenarioConfig& cfg,
                         CounterRng& rng);

/// Control input that steers the nominal motion to the predicted state.
Vec4 control_input(const MotionState& predicted, const MotionState& prev_estimate, double slot_s);

/// Predicted state for a planned position: velocity is the displacement from
/// the previous estimate divided by the slot length.
MotionState planned_state(const Vec2& beam_pos, const MotionState& prev_estimate, double slot_s);

/// Radar sensing power gain rho_r.
double sensing_gain(const ScenarioConfig& cfg);

/// Azimuth and range noise variances at a position for sensing ratio w.
/// Throws SingularityError when |y| is inside the guard band.
NoiseVariances meas_noise_vars(const Vec2& pos, double w, const ScenarioConfig& cfg);

/// Noiseless measurement map h(x): (azimuth, slant range).
Vec2 measurement_map(const Vec2& pos, double altitude_m);

Measurement measure(const MotionState& truth, double w, const ScenarioConfig& cfg, CounterRng& rng);

/// Largest admissible target SNR (full array gain at the closest allowed distance).
double gamma_max(const ScenarioConfig& cfg);

}  // namespace isac
