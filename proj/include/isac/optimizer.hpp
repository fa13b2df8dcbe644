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
#include <optional>
#include <vector>

#include "isac/config.hpp"
#include "isac/outage.hpp"
#include "isac/types.hpp"

namespace isac {

/// What the planner knows when slot n starts.
struct SlotInputs {
  PlanningContext ctx;
  Vec2 start_point = Vec2::Zero();  // SCA warm start, projected before use
  const OptimizerConfig* opt = nullptr;

  const ScenarioConfig& scenario() const { return *ctx.cfg; }
  Vec2 disk_center() const { return ctx.prev_estimate.position(); }
};

struct SlotDecision {
  Vec2 beam_pos = Vec2::Zero();
  double w = 1.0;
  SnrTargets targets{};
  double capacity = 0.0;
  bool feasible = false;
  StageOps ops{};
  int iterations = 0;   // outer iterations of the solver
  int p22_solves = 0;   // number of SCA runs
  std::vector<double> objective_history;  // objective after each outer iteration
  std::vector<double> trial_history;      // search-based: C_i tried per iteration
};

struct P31Result {
  double w = 1.0;
  SnrTargets targets{};
  double capacity = 0.0;
};

struct P22Result {
  Vec2 beam_pos = Vec2::Zero();
  double value = 0.0;  // max OP minus threshold at beam_pos
  int iterations = 0;
};

/// Projection of p onto {|q - center| <= radius} intersected with {y >= y_min}.
/// Throws InfeasibleError when the intersection is empty.
Vec2 project_feasible(const Vec2& p, const Vec2& center, double radius, double y_min);

/// Minimiser of g^T (q - e) + Q |q - e|^2 over the disk/half-plane set.
Vec2 surrogate_minimizer(const Vec2& grad, const Vec2& expansion, double curvature,
                         const Vec2& center, double radius, double y_min);

/// Central-difference gradient of the active branch of max(OP_p, OP_e).
Vec2 grad_max_op(const Vec2& beam_pos, double w, const SnrTargets& targets, const SlotInputs& in,
                 double fd_step);

struct ScaProblem {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double y_min = 0.0;
};

/// SCA with the quadratic surrogate of the objective. Q starts at
/// 10 |grad| / radius unless opt.sca_curvature is positive, and doubles
/// whenever a step would increase the objective.
P22Result sca_minimize(const ScaProblem& prob, const Vec2& start, const OptimizerConfig& opt,
                       bool stop_when_negative = false);

/// SCA on the maximum-OP constraint. With stop_when_feasible the loop exits at
/// the first iterate with a negative value.
P22Result solve_p22_sca(double w, const SnrTargets& targets, const SlotInputs& in,
                        const Vec2& start, bool stop_when_feasible = false);

/// Largest target with OP strictly below the threshold, searched by bisection
/// on (0, cap]. `op` must be nondecreasing in its argument.
template <class OpFn>
double max_feasible_gamma(OpFn&& op, double threshold, double cap, double rel_tol);

/// Best (w, gamma) for a fixed beam position. When fixed_w is set only that
/// ratio is evaluated.
P31Result solve_p31(const Vec2& beam_pos, const SlotInputs& in,
                    std::optional<double> fixed_w = std::nullopt);

/// Decision for a beam position chosen elsewhere: (w, gamma) from solve_p31.
SlotDecision decide_at(const Vec2& beam_pos, const SlotInputs& in,
                       std::optional<double> fixed_w = std::nullopt);

SlotDecision search_based_solve(const SlotInputs& in);
SlotDecision ao_solve(const SlotInputs& in);

/// Iteration bound 2 * I_w * I_C^2 of the search-based solver.
long search_iteration_bound(const ScenarioConfig& s, const OptimizerConfig& o);

// ----------------------------------------------------------------------------

template <class OpFn>
double max_feasible_gamma(OpFn&& op, double threshold, double cap, double rel_tol) {
  if (op(cap) < threshold) return cap;
  double lo = 0.0;
  double hi = cap;
  const double tol = rel_tol * cap;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (op(mid) < threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace isac
