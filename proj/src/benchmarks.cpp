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

#include "isac/benchmarks.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "isac/ekf.hpp"
#include "isac/model.hpp"

namespace isac {

namespace {

constexpr double kNoFloor = -std::numeric_limits<double>::infinity();

double safe_eval(const std::function<double(const Vec2&)>& f, const Vec2& q) {
  try {
    return f(q);
  } catch (const SingularityError&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

Vec2 sfh_step(const Vec2& prev_pos, const Vec2& target, const ScenarioConfig& cfg) {
  const Vec2 d = target - prev_pos;
  const double dist = d.norm();
  const double reach = cfg.reach_m();
  if (dist <= reach) return target;
  return prev_pos + d * (reach / dist);
}

double mpcrb_objective(const Vec2& q, const PlanningContext& ctx) {
  const MotionState planned = planned_state(q, ctx.prev_estimate, ctx.cfg->slot_s);
  return planned_posterior_mse(ctx.prior_mse, planned, ctx.cfg->w_max, *ctx.cfg).trace();
}

double msigma1_objective(const Vec2& q, const ScenarioConfig& cfg) {
  return meas_noise_vars(q, cfg.w_max, cfg).var_angle;
}

std::vector<Vec2> seed_points(const Vec2& center, double radius, double y_min) {
  struct Ring {
    double frac;
    int count;
  };
  static constexpr Ring kRings[] = {{0.25, 7}, {0.5, 12}, {0.75, 12}, {1.0, 32}};
  std::vector<Vec2> seeds;
  seeds.reserve(64);
  seeds.push_back(project_feasible(center, center, radius, y_min));
  for (const Ring& ring : kRings) {
    for (int k = 0; k < ring.count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / ring.count;
      const Vec2 p = center + ring.frac * radius * Vec2(std::cos(a), std::sin(a));
      seeds.push_back(project_feasible(p, center, radius, y_min));
    }
  }
  return seeds;
}

Vec2 minimize_on_disk(const std::function<double(const Vec2&)>& f, const Vec2& center,
                      double radius, double y_min, double resolution) {
  Vec2 best = center;
  double best_val = std::numeric_limits<double>::infinity();
  for (const Vec2& s : seed_points(center, radius, y_min)) {
    const double v = safe_eval(f, s);
    if (v < best_val) {
      best_val = v;
      best = s;
    }
  }
  static const Vec2 kDirs[] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
  double step = radius / 8.0;
  while (step >= resolution) {
    Vec2 next = best;
    double next_val = best_val;
    for (const Vec2& d : kDirs) {
      const Vec2 p = project_feasible(best + step * d, center, radius, y_min);
      const double v = safe_eval(f, p);
      if (v < next_val) {
        next_val = v;
        next = p;
      }
    }
    if (next_val < best_val) {
      best = next;
      best_val = next_val;
    } else {
      step *= 0.5;
    }
  }
  return best;
}

Vec2 mpcrb_step(const SlotInputs& in) {
  const PlanningContext& ctx = in.ctx;
  return minimize_on_disk([&](const Vec2& q) { return mpcrb_objective(q, ctx); },
                          in.disk_center(), in.scenario().reach_m(), kNoFloor);
}

Vec2 msigma1_step(const SlotInputs& in) {
  const ScenarioConfig& s = in.scenario();
  return minimize_on_disk([&](const Vec2& q) { return msigma1_objective(q, s); },
                          in.disk_center(), s.reach_m(), s.y_min_m);
}

}  // namespace isac
