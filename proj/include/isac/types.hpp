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

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace isac {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat24 = Eigen::Matrix<double, 2, 4>;
using Mat42 = Eigen::Matrix<double, 4, 2>;

// Horizontal positions closer than this to the array axis (|y| < guard) are
// treated as singular for azimuth measurements.
inline constexpr double kSingularGuard = 1e-9;

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kinematic state (x, vx, y, vy) in metres and metres per second.
struct MotionState {
  double x_m = 0.0;
  double vx_mps = 0.0;
  double y_m = 0.0;
  double vy_mps = 0.0;

  static MotionState from_vec(const Vec4& v) { return {v(0), v(1), v(2), v(3)}; }
  Vec4 vec() const { return {x_m, vx_mps, y_m, vy_mps}; }
  Vec2 position() const { return {x_m, y_m}; }
};

}  // namespace isac
