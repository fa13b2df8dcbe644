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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "isac/config.hpp"
#include "isac/model.hpp"
#include "isac/optimizer.hpp"
#include "isac/types.hpp"

#include "json.hpp"

namespace isac {

enum class Policy { kProposedSearch, kProposedAo, kSfh, kMpcrb, kMsigma1 };

Policy parse_policy(std::string_view name);
std::string policy_name(Policy p);

struct SlotRecord {
  int slot = 0;
  MotionState truth{};
  MotionState predicted{};
  Measurement measurement{};
  MotionState estimate{};
  double w = 1.0;
  SnrTargets targets{};
  StageOps approx_ops{};
  double snr_pred = 0.0;
  double snr_est = 0.0;
  bool outage_pred = false;
  bool outage_est = false;
  double capacity = 0.0;
  double trace_prior = 0.0;
  double trace_post = 0.0;
  bool feasible = false;
  int solver_iterations = 0;
  int p22_solves = 0;
  bool valid = true;  // false when the slot coasted on the prediction
};

struct Proportion {
  long events = 0;
  long trials = 0;
  double rate() const { return trials > 0 ? static_cast<double>(events) / trials : 0.0; }
  /// Wilson score interval half-width at 95 %.
  double wilson_half_width() const;
  double wilson_center() const;
};

struct RunResult {
  Policy policy = Policy::kProposedAo;
  std::uint64_t seed = 0;
  std::vector<SlotRecord> slots;
  double mean_capacity = 0.0;
  Proportion outage_pred{};
  Proportion outage_est{};
  int invalid_slots = 0;
};

/// Runs the closed loop for cfg.scenario.num_slots slots with the given seed.
RunResult run(const Config& cfg, Policy policy, std::uint64_t seed);
inline RunResult run(const Config& cfg, Policy policy) {
  return run(cfg, policy, cfg.scenario.rng_seed);
}

struct MonteCarloAggregate {
  std::vector<RunResult> runs;  // in seed order
  Proportion outage_pred{};
  Proportion outage_est{};
  std::vector<double> mean_capacity_per_slot;
  /// Mean over runs of each run's mean capacity over the last `window` slots.
  double window_mean_capacity(int window) const;
};

/// Independent runs with seeds rng_seed + i, distributed across workers.
MonteCarloAggregate monte_carlo_runs(const Config& cfg, Policy policy, int n_runs);

std::vector<std::string> slot_csv_header();
std::string slot_csv_row(const SlotRecord& r);

/// Writes `text` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

void write_run_csv(const std::filesystem::path& path, const RunResult& r);
nlohmann::json run_metadata(const Config& cfg, const RunResult& r);

/// printf-style %.9g formatting used by every CSV writer.
std::string fmt9(double v);

}  // namespace isac
