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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "isac/model.hpp"
#include "isac/sim.hpp"

using namespace isac;

namespace {

Config short_config(int slots) {
  Config cfg;
  ScenarioConfig& s = cfg.scenario;
  s.initial_state = {6.0, 0.0, 8.0, 0.0};
  s.initial_estimate = {6.02, 0.01, 8.01, -0.01};
  s.num_slots = slots;
  cfg.benchmark.hover_target = {2.0, 6.0};
  return cfg;
}

std::string csv_of(const RunResult& r) {
  std::ostringstream os;
  for (const auto& rec : r.slots) os << slot_csv_row(rec) << "\n";
  return os.str();
}

}  // namespace

TEST_CASE("policy names round-trip") {
  for (const char* n : {"proposed-search", "proposed-ao", "sfh", "mpcrb", "msigma1"}) {
    CHECK(policy_name(parse_policy(n)) == n);
  }
  CHECK_THROWS_AS(parse_policy("hover"), ConfigError);
}

TEST_CASE("runs are deterministic per seed") {
  const Config cfg = short_config(6);
  const RunResult a = run(cfg, Policy::kProposedAo, 11);
  const RunResult b = run(cfg, Policy::kProposedAo, 11);
  const RunResult c = run(cfg, Policy::kProposedAo, 12);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(csv_of(a) != csv_of(c));
  const std::string text = csv_of(a);
  const std::string first = text.substr(0, text.find('\n'));
  CHECK(slot_csv_header().size() ==
        static_cast<std::size_t>(std::count(first.begin(), first.end(), ',') + 1));
}

TEST_CASE("noiseless closed loop tracks exactly") {
  Config cfg = short_config(30);
  ScenarioConfig& s = cfg.scenario;
  s.process_noise_intensity = 0.0;
  s.meas_coeff_angle = s.meas_coeff_range = 0.0;
  s.initial_estimate = s.initial_state;
  for (Policy p : {Policy::kSfh, Policy::kProposedAo}) {
    const RunResult r = run(cfg, p);
    for (const SlotRecord& rec : r.slots) {
      CHECK((rec.truth.vec() - rec.predicted.vec()).norm() < 1e-9);
      CHECK((rec.estimate.vec() - rec.truth.vec()).norm() < 1e-6);
      CHECK_FALSE(rec.outage_pred);
      CHECK_FALSE(rec.outage_est);
    }
  }
}

TEST_CASE("state bookkeeping of the control law") {
  Config cfg = short_config(1500);
  cfg.scenario.process_noise_intensity = 1e-3;
  const RunResult r = run(cfg, Policy::kSfh, 5);
  const Mat4 g = transition_matrix(cfg.scenario.slot_s);
  MotionState prev_truth = cfg.scenario.initial_state;
  MotionState prev_est = cfg.scenario.initial_estimate;
  Mat4 scatter = Mat4::Zero();
  for (const SlotRecord& rec : r.slots) {
    const Vec4 z = rec.truth.vec() - rec.predicted.vec() - g * (prev_truth.vec() - prev_est.vec());
    scatter += z * z.transpose();
    prev_truth = rec.truth;
    prev_est = rec.estimate;
  }
  scatter /= static_cast<double>(r.slots.size());
  const Mat4 qp = process_noise_cov(cfg.scenario.slot_s, cfg.scenario.process_noise_intensity);
  for (int i : {0, 1, 2, 3}) CHECK(scatter(i, i) == doctest::Approx(qp(i, i)).epsilon(0.12));
  CHECK(scatter(0, 1) == doctest::Approx(qp(0, 1)).epsilon(0.15));

  // Without process noise the residual vanishes.
  cfg.scenario.process_noise_intensity = 0.0;
  cfg.scenario.num_slots = 50;
  const RunResult z = run(cfg, Policy::kSfh, 5);
  prev_truth = cfg.scenario.initial_state;
  prev_est = cfg.scenario.initial_estimate;
  for (const SlotRecord& rec : z.slots) {
    const Vec4 res = rec.truth.vec() - rec.predicted.vec() - g * (prev_truth.vec() - prev_est.vec());
    CHECK(res.norm() < 1e-9);
    prev_truth = rec.truth;
    prev_est = rec.estimate;
  }
}

TEST_CASE("single-slot run equals one optimise and measure cycle") {
  const Config cfg = short_config(1);
  const RunResult r = run(cfg, Policy::kProposedAo, 3);
  const ScenarioConfig& s = cfg.scenario;
  const MotionState& e = s.initial_estimate;
  const SlotInputs in{PlanningContext(e, s.initial_mse(), s),
                      e.position() + s.slot_s * Vec2(e.vx_mps, e.vy_mps), &cfg.optimizer};
  const SlotDecision d = ao_solve(in);
  REQUIRE(r.slots.size() == 1);
  const SlotRecord& rec = r.slots[0];
  CHECK(rec.predicted.position() == d.beam_pos);
  CHECK(rec.w == d.w);
  CHECK(rec.capacity == d.capacity);
  CHECK(rec.snr_pred == received_snr(rec.truth.position(), d.beam_pos, s));
  CHECK(rec.outage_pred == (rec.snr_pred < d.targets.gamma_pred));
  CHECK(rec.outage_est == (rec.snr_est < d.targets.gamma_est));
}

TEST_CASE("Monte Carlo aggregation") {
  const Config cfg = short_config(10);
  const MonteCarloAggregate one = monte_carlo_runs(cfg, Policy::kSfh, 1);
  CHECK(csv_of(one.runs[0]) == csv_of(run(cfg, Policy::kSfh)));
  CHECK_THROWS_AS(monte_carlo_runs(cfg, Policy::kSfh, 0), std::invalid_argument);

  Proportion p{40, 2000};
  Proportion p2{80, 4000};
  CHECK(p2.wilson_half_width() / p.wilson_half_width() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.01));
  CHECK(p.wilson_center() > p.rate());
}

TEST_CASE("empirical outage rate respects the threshold where the approximation holds") {
  Config cfg;
  ScenarioConfig& s = cfg.scenario;
  s.initial_state = {0.0, 0.0, 15.0, 0.0};
  s.initial_estimate = {0.0, 0.0, 15.0, 0.0};
  s.initial_mse_scale = 1e-2;
  s.num_slots = 100;
  s.rng_seed = 100;
  cfg.benchmark.hover_target = {0.0, 15.0};
  const MonteCarloAggregate agg = monte_carlo_runs(cfg, Policy::kSfh, 20);
  const double eps = s.outage_threshold;
  CHECK(agg.outage_pred.trials == 2000);
  CHECK(agg.outage_pred.rate() <= eps + 2.0 * agg.outage_pred.wilson_half_width());
  CHECK(agg.outage_est.rate() <= eps + 2.0 * agg.outage_est.wilson_half_width());
}

TEST_CASE("CSV output is written atomically") {
  const Config cfg = short_config(3);
  const RunResult r = run(cfg, Policy::kSfh);
  const auto dir = std::filesystem::temp_directory_path() / "isac_sim_test";
  std::filesystem::remove_all(dir);
  write_run_csv(dir / "run.csv", r);
  CHECK(std::filesystem::exists(dir / "run.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "run.csv.tmp"));
  std::ifstream f(dir / "run.csv");
  std::string header;
  std::getline(f, header);
  CHECK(header.rfind("slot,x,vx,y,vy", 0) == 0);
  const auto meta = run_metadata(cfg, r);
  CHECK(meta["policy"] == "sfh");
  CHECK(meta["config"]["num_slots"] == 3);
  std::filesystem::remove_all(dir);
}
