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

#include <functional>
#include <vector>

#include "isac/config.hpp"
#include "isac/optimizer.hpp"
#include "isac/types.hpp"

namespace isac {

/// Straight flight towards `target`, then hover there.
Vec2 sfh_step(const Vec2& prev_pos, const Vec2& target, const ScenarioConfig& cfg);

/// Trace of the posterior MSE expected at beam_pos with w = w_max.
double mpcrb_objective(const Vec2& beam_pos, const PlanningContext& ctx);
/// Azimuth noise variance at beam_pos with w = w_max.
double msigma1_objective(const Vec2& beam_pos, const ScenarioConfig& cfg);

Vec2 mpcrb_step(const SlotInputs& in);
Vec2 msigma1_step(const SlotInputs& in);

/// The 64 seed points (centre, three inner rings, boundary ring) projected
/// onto disk ∩ {y >= y_min}.
std::vector<Vec2> seed_points(const Vec2& center, double radius, double y_min);

/// Seeded coordinate search over disk ∩ {y >= y_min}; refines the best seed
/// until the step drops below `resolution`.
Vec2 minimize_on_disk(const std::function<double(const Vec2&)>& f, const Vec2& center,
                      double radius, double y_min, double resolution = 1e-3);

}  // namespace isac
