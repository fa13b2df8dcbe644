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
#include <limits>

#include "doctest.h"
#include "isac/benchmarks.hpp"
#include "isac/model.hpp"

using namespace isac;

namespace {

SlotInputs inputs_at(const Config& cfg, const MotionState& est, double mse_scale) {
  return {PlanningContext(est, Mat4::Identity() * mse_scale, cfg.scenario), est.position(),
          &cfg.optimizer};
}

}  // namespace

TEST_CASE("straight flight and hover") {
  ScenarioConfig s;
  const Vec2 target(1.0, 1.0);
  CHECK((sfh_step(target, target, s) - target).norm() == 0.0);
  const Vec2 step = sfh_step({20.0, 20.0}, target, s);
  CHECK((step - Vec2(20.0, 20.0)).norm() == doctest::Approx(s.reach_m()));

  Vec2 q(20.0, 20.0);
  int slots = 0;
  while ((q - target).norm() > 0.0 && slots < 1000) {
    q = sfh_step(q, target, s);
    ++slots;
  }
  CHECK(slots == static_cast<int>(std::ceil(std::sqrt(2.0) * 19.0 / s.reach_m())));
  CHECK(slots == 45);
}

TEST_CASE("m-sigma1 objective and steps") {
  Config cfg;
  ScenarioConfig& s = cfg.scenario;
  s.meas_coeff_angle = s.meas_coeff_range = 1.0;
  CHECK(msigma1_objective({2.5, 3.0}, s) == doctest::Approx(msigma1_objective({-2.5, 3.0}, s)));

  const MotionState est{6.0, 0.0, 4.0, 0.0};
  const SlotInputs in = inputs_at(cfg, est, 1e-3);
  const Vec2 q = msigma1_step(in);
  CHECK((q - est.position()).norm() <= s.reach_m() + 1e-9);
  CHECK(q.y() >= s.y_min_m);
  for (const Vec2& seed : seed_points(est.position(), s.reach_m(), s.y_min_m)) {
    CHECK(msigma1_objective(q, s) <= msigma1_objective(seed, s));
  }

  // Repeated steps converge to the hover point (0, y_min).
  Vec2 p(20.0, 20.0);
  for (int n = 0; n < 200; ++n) {
    const MotionState e{p.x(), 0.0, p.y(), 0.0};
    p = msigma1_step(inputs_at(cfg, e, 1e-3));
  }
  CHECK((p - Vec2(0.0, s.y_min_m)).norm() < 1e-2);
}

TEST_CASE("m-PCRB steps") {
  Config cfg;
  ScenarioConfig& s = cfg.scenario;
  s.meas_coeff_angle = s.meas_coeff_range = 0.1;
  const MotionState est{20.0, 0.0, 20.0, 0.0};
  const SlotInputs in = inputs_at(cfg, est, 1e-2);
  const Vec2 q = mpcrb_step(in);
  CHECK((q - est.position()).norm() <= s.reach_m() + 1e-9);
  const auto seeds = seed_points(est.position(), s.reach_m(), -std::numeric_limits<double>::infinity());
  CHECK(seeds.size() == 64);
  for (const Vec2& seed : seeds) {
    CHECK(mpcrb_objective(q, in.ctx) <= mpcrb_objective(seed, in.ctx));
  }

  // Without process noise and with a useless measurement the objective is
  // the predicted trace wherever the UAV goes.
  s.process_noise_intensity = 0.0;
  s.meas_coeff_angle = s.meas_coeff_range = 1e6;
  const SlotInputs flat = inputs_at(cfg, est, 1e-2);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Vec2& seed : seeds) {
    const double v = mpcrb_objective(seed, flat.ctx);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 1e-9);
  CHECK(lo == doctest::Approx(flat.ctx.prior_mse.trace()).epsilon(1e-9));
}

TEST_CASE("benchmark capacities use the P3.1 path at w_max") {
  Config cfg;
  const MotionState est{10.0, 0.0, 10.0, 0.0};
  const SlotInputs in = inputs_at(cfg, est, 1e-3);
  const Vec2 q = sfh_step(est.position(), {1.0, 1.0}, cfg.scenario);
  const SlotDecision d = decide_at(q, in, cfg.scenario.w_max);
  const P31Result r = solve_p31(q, in, cfg.scenario.w_max);
  CHECK(d.w == cfg.scenario.w_max);
  CHECK(d.capacity == r.capacity);
  CHECK(d.targets.gamma_pred == r.targets.gamma_pred);
}
