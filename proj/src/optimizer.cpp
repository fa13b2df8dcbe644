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

#include "isac/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/model.hpp"

namespace isac {

namespace {

constexpr double kTieTol = 1e-12;
constexpr double kProjectionTol = 1e-10;
constexpr int kProjectionMaxIters = 100000;
constexpr int kMaxCurvatureDoublings = 60;
constexpr double kGammaCapFactor = 1.0 - 1e-9;
constexpr double kInvPhi = 0.6180339887498949;

Vec2 project_disk(const Vec2& p, const Vec2& center, double radius) {
  const Vec2 d = p - center;
  const double n = d.norm();
  if (n <= radius) return p;
  return center + d * (radius / n);
}

Vec2 project_half(const Vec2& p, double y_min) { return {p.x(), std::max(p.y(), y_min)}; }

double stage_op(const Vec2& q, double w, const SnrTargets& t, const PlanningContext& ctx,
                Stage stage) {
  if (stage == Stage::kPrediction) {
    return approx_op(q, t.gamma_pred, {q, ctx.prediction_cov()}, *ctx.cfg);
  }
  return approx_op(q, t.gamma_est, {q, ctx.estimation_cov(q, w)}, *ctx.cfg);
}

double gamma_cap(const ScenarioConfig& s) { return gamma_max(s) * kGammaCapFactor; }

Vec2 feasible_start(const SlotInputs& in) {
  const ScenarioConfig& s = in.scenario();
  return project_feasible(in.start_point, in.disk_center(), s.reach_m(), s.y_min_m);
}

SnrTargets targets_for(double w, const SlotInputs& in, const Vec2& q, double cap) {
  const ScenarioConfig& s = in.scenario();
  const double eps = s.outage_threshold;
  const double tol = in.opt->gamma_rel_tol;
  const Mat2 est_cov = in.ctx.estimation_cov(q, w);
  SnrTargets t;
  t.gamma_est = max_feasible_gamma(
      [&](double g) { return approx_op(q, g, {q, est_cov}, s); }, eps, cap, tol);
  return t;
}

int ceil_log2(double x) { return x <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(x))); }

}  // namespace

Vec2 project_feasible(const Vec2& p, const Vec2& center, double radius, double y_min) {
  if (center.y() + radius < y_min) {
    throw InfeasibleError("reachable disk lies entirely below y_min");
  }
  // Dykstra's alternating projection; the increments make the limit the true
  // projection rather than just a point of the intersection.
  Vec2 x = p;
  Vec2 inc_disk = Vec2::Zero();
  Vec2 inc_half = Vec2::Zero();
  for (int it = 0; it < kProjectionMaxIters; ++it) {
    const Vec2 y = project_disk(x + inc_disk, center, radius);
    inc_disk = x + inc_disk - y;
    const Vec2 next = project_half(y + inc_half, y_min);
    inc_half = y + inc_half - next;
    const bool done = (next - x).norm() < kProjectionTol && (next - y).norm() < kProjectionTol;
    x = next;
    if (done) break;
  }
  return x;
}

Vec2 surrogate_minimizer(const Vec2& grad, const Vec2& expansion, double curvature,
                         const Vec2& center, double radius, double y_min) {
  if (!(curvature > 0.0)) throw std::invalid_argument("surrogate curvature must be positive");
  return project_feasible(expansion - grad / (2.0 * curvature), center, radius, y_min);
}

Vec2 grad_max_op(const Vec2& q, double w, const SnrTargets& t, const SlotInputs& in,
                 double h) {
  const PlanningContext& ctx = in.ctx;
  const double zp = stage_op(q, w, t, ctx, Stage::kPrediction);
  const double ze = stage_op(q, w, t, ctx, Stage::kEstimation);
  const Stage active = (zp >= ze - kTieTol) ? Stage::kPrediction : Stage::kEstimation;
  auto f = [&](const Vec2& p) { return stage_op(p, w, t, ctx, active); };

  Vec2 g;
  g.x() = (f(q + Vec2(h, 0.0)) - f(q - Vec2(h, 0.0))) / (2.0 * h);
  if (q.y() - h < in.scenario().y_min_m) {
    g.y() = (f(q + Vec2(0.0, h)) - (active == Stage::kPrediction ? zp : ze)) / h;
  } else {
    g.y() = (f(q + Vec2(0.0, h)) - f(q - Vec2(0.0, h))) / (2.0 * h);
  }
  return g;
}

P22Result sca_minimize(const ScaProblem& prob, const Vec2& start, const OptimizerConfig& o,
                       bool stop_when_negative) {
  P22Result best;
  best.beam_pos = project_feasible(start, prob.center, prob.radius, prob.y_min);
  best.value = prob.value(best.beam_pos);
  if (stop_when_negative && best.value < 0.0) return best;

  Vec2 q = best.beam_pos;
  double value = best.value;
  double curvature = o.sca_curvature;
  for (int m = 0; m < o.sca_max_iters; ++m) {
    best.iterations = m + 1;
    const Vec2 g = prob.gradient(q);
    const double gn = g.norm();
    if (gn == 0.0) break;
    if (!(curvature > 0.0)) curvature = 10.0 * gn / prob.radius;

    Vec2 next = q;
    double next_value = value;
    bool accepted = false;
    for (int d = 0; d <= kMaxCurvatureDoublings; ++d) {
      next = surrogate_minimizer(g, q, curvature, prob.center, prob.radius, prob.y_min);
      if ((next - q).norm() < o.sca_step_tol) break;
      next_value = prob.value(next);
      if (next_value <= value) {
        accepted = true;
        break;
      }
      curvature *= 2.0;
    }
    if (!accepted) break;
    const double step = (next - q).norm();
    q = next;
    value = next_value;
    if (value < best.value) {
      best.value = value;
      best.beam_pos = q;
    }
    if (stop_when_negative && value < 0.0) break;
    if (step < o.sca_step_tol) break;
  }
  return best;
}

P22Result solve_p22_sca(double w, const SnrTargets& targets, const SlotInputs& in,
                        const Vec2& start, bool stop_when_feasible) {
  const ScenarioConfig& s = in.scenario();
  ScaProblem prob;
  prob.value = [&](const Vec2& q) { return max_op_constraint(q, w, targets, in.ctx); };
  prob.gradient = [&](const Vec2& q) { return grad_max_op(q, w, targets, in, in.opt->fd_step); };
  prob.center = in.disk_center();
  prob.radius = s.reach_m();
  prob.y_min = s.y_min_m;
  return sca_minimize(prob, start, *in.opt, stop_when_feasible);
}

P31Result solve_p31(const Vec2& q, const SlotInputs& in, std::optional<double> fixed_w) {
  const ScenarioConfig& s = in.scenario();
  const OptimizerConfig& o = *in.opt;
  const double cap = gamma_cap(s);
  const double eps = s.outage_threshold;

  const Mat2 pred_cov = in.ctx.prediction_cov();
  const double gamma_pred = max_feasible_gamma(
      [&](double g) { return approx_op(q, g, {q, pred_cov}, s); }, eps, cap, o.gamma_rel_tol);

  auto evaluate = [&](double w) {
    P31Result r;
    r.w = w;
    r.targets = targets_for(w, in, q, cap);
    r.targets.gamma_pred = gamma_pred;
    r.capacity = outage_capacity(r.targets, w);
    return r;
  };

  if (fixed_w) return evaluate(*fixed_w);

  auto golden = [&](double a, double b) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    P31Result rc = evaluate(c);
    P31Result rd = evaluate(d);
    while (b - a > o.golden_tol) {
      if (rc.capacity >= rd.capacity) {
        b = d;
        d = c;
        rd = rc;
        c = b - kInvPhi * (b - a);
        rc = evaluate(c);
      } else {
        a = c;
        c = d;
        rc = rd;
        d = a + kInvPhi * (b - a);
        rd = evaluate(d);
      }
    }
    return rc.capacity >= rd.capacity ? rc : rd;
  };

  const double lo = s.w_min;
  const double hi = s.w_max;
  if (hi - lo <= 0.0) return evaluate(lo);

  // Coarse grid, refined around its best point.
  const int n = std::max(2, o.w_grid_points);
  std::vector<P31Result> grid;
  grid.reserve(n);
  for (int i = 0; i < n; ++i) grid.push_back(evaluate(lo + (hi - lo) * i / (n - 1)));
  int arg = 0;
  for (int i = 1; i < n; ++i) {
    if (grid[i].capacity > grid[arg].capacity) arg = i;
  }
  P31Result best = grid[arg];
  const double step = (hi - lo) / (n - 1);
  const P31Result refined =
      golden(std::max(lo, best.w - step), std::min(hi, best.w + step));
  if (refined.capacity > best.capacity) best = refined;

  const P31Result global = golden(lo, hi);
  if (global.capacity > best.capacity) best = global;
  return best;
}

namespace {

SlotDecision finalize(SlotDecision d, const SlotInputs& in) {
  d.ops = stage_ops(d.beam_pos, d.w, d.targets, in.ctx);
  d.feasible = std::max(d.ops.prediction, d.ops.estimation) < in.scenario().outage_threshold;
  if (!d.feasible) d.capacity = 0.0;
  return d;
}

struct TwoLayerOutcome {
  bool found = false;
  Vec2 beam_pos = Vec2::Zero();
  double w = 1.0;
  SnrTargets targets{};
};

}  // namespace

SlotDecision decide_at(const Vec2& beam_pos, const SlotInputs& in, std::optional<double> fixed_w) {
  const P31Result r = solve_p31(beam_pos, in, fixed_w);
  SlotDecision d;
  d.beam_pos = beam_pos;
  d.w = r.w;
  d.targets = r.targets;
  d.capacity = r.capacity;
  d.iterations = 1;
  d.objective_history = {r.capacity};
  return finalize(std::move(d), in);
}

SlotDecision search_based_solve(const SlotInputs& in) {
  const ScenarioConfig& s = in.scenario();
  const OptimizerConfig& o = *in.opt;
  const double c_max = std::log2(1.0 + gamma_cap(s));
  const double eps = s.outage_threshold;

  SlotDecision decision;
  Vec2 warm = feasible_start(in);
  decision.beam_pos = warm;
  decision.w = s.w_max;

  auto try_candidate = [&](double w, double c_p, double c_i, TwoLayerOutcome& out) -> int {
    const double c_e = (1.0 - w) > 1e-12 ? std::max(0.0, (c_i - w * c_p) / (1.0 - w)) : 0.0;
    SnrTargets t{std::exp2(c_p) - 1.0, std::exp2(c_e) - 1.0};
    const P22Result r = solve_p22_sca(w, t, in, warm, /*stop_when_feasible=*/true);
    ++decision.p22_solves;
    if (r.value < 0.0) {
      out = {true, r.beam_pos, w, t};
      return 0;
    }
    const StageOps ops = stage_ops(r.beam_pos, w, t, in.ctx);
    const bool lower = o.inner_branch == InnerBranchRule::kPredictionInfeasible
                           ? ops.prediction > eps
                           : ops.prediction >= ops.estimation;
    return lower ? -1 : 1;
  };

  // One case of the two-layer search. upper_case: C_p >= C_e.
  auto two_layer = [&](double c_i, bool upper_case) {
    TwoLayerOutcome out;
    double w_lo = s.w_min;
    double w_hi = s.w_max;
    bool first = true;
    while (first || w_hi - w_lo > o.tol_w) {
      first = false;
      const double w = 0.5 * (w_lo + w_hi);
      double cp_lo, cp_hi;
      if (upper_case) {
        cp_lo = c_i;
        cp_hi = std::min(c_max, c_i / w);
      } else {
        cp_lo = std::max(0.0, (c_i - (1.0 - w) * c_max) / w);
        cp_hi = c_i;
      }
      bool first_inner = true;
      while (cp_lo <= cp_hi && (first_inner || cp_hi - cp_lo > o.tol_C)) {
        first_inner = false;
        const double c_p = 0.5 * (cp_lo + cp_hi);
        const int verdict = try_candidate(w, c_p, c_i, out);
        if (verdict == 0) return out;
        if (verdict < 0) {
          cp_hi = c_p;
        } else {
          cp_lo = c_p;
        }
      }
      if (upper_case) {
        w_lo = w;
      } else {
        w_hi = w;
      }
    }
    return out;
  };

  double lo = 0.0;
  double hi = c_max;
  while (hi - lo > o.tol_obj) {
    const double c_i = 0.5 * (lo + hi);
    ++decision.iterations;
    decision.trial_history.push_back(c_i);
    TwoLayerOutcome found = two_layer(c_i, true);
    if (!found.found) found = two_layer(c_i, false);
    if (found.found) {
      lo = c_i;
      decision.beam_pos = found.beam_pos;
      decision.w = found.w;
      decision.targets = found.targets;
      warm = found.beam_pos;
    } else {
      hi = c_i;
    }
    decision.objective_history.push_back(lo);
  }
  decision.capacity = outage_capacity(decision.targets, decision.w);
  return finalize(std::move(decision), in);
}

SlotDecision ao_solve(const SlotInputs& in) {
  const OptimizerConfig& o = *in.opt;
  SlotDecision best;
  Vec2 q = feasible_start(in);
  best.beam_pos = q;
  best.capacity = -1.0;
  int p22 = 0;
  int iters = 0;
  std::vector<double> history;
  double previous = std::numeric_limits<double>::quiet_NaN();

  for (int i = 0; i < o.max_outer_iters; ++i) {
    iters = i + 1;
    const P31Result r = solve_p31(q, in);
    history.push_back(r.capacity);
    if (r.capacity > best.capacity) {
      best.capacity = r.capacity;
      best.beam_pos = q;
      best.w = r.w;
      best.targets = r.targets;
    }
    if (std::isfinite(previous) && std::abs(r.capacity - previous) < o.tol_obj) break;
    previous = r.capacity;
    if (i + 1 == o.max_outer_iters) break;
    const P22Result step = solve_p22_sca(r.w, r.targets, in, q);
    ++p22;
    q = step.beam_pos;
  }
  best.iterations = iters;
  best.p22_solves = p22;
  best.objective_history = std::move(history);
  return finalize(std::move(best), in);
}

long search_iteration_bound(const ScenarioConfig& s, const OptimizerConfig& o) {
  const long i_w = ceil_log2(std::floor((s.w_max - s.w_min) / o.tol_w));
  const long i_c = ceil_log2(std::floor(std::log2(1.0 + gamma_max(s)) / o.tol_C));
  return 2 * std::max(1L, i_w) * std::max(1L, i_c) * std::max(1L, i_c);
}

}  // namespace isac
