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

#include "isac/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace isac {

/// Physical and scenario constants, all in SI units once loaded.
///
/// The noise power may be given in the JSON file either in watts
/// (`noise_power_W`) or in dBm (`noise_power_dBm`); it is converted once at
/// load time and stored in watts.
struct ScenarioConfig {
  double transmit_power_W = 0.1;
  double noise_power_W = 1e-11;
  double wavelength_m = 0.01;
  double rcs_m2 = 0.2;
  double altitude_m = 50.0;
  double slot_s = 0.02;
  int n_tx = 16;
  int n_rx = 16;
  double matched_filter_gain = 1e4;
  double meas_coeff_angle = 0.1;
  double meas_coeff_range = 0.1;
  double process_noise_intensity = 1e-5;
  double outage_threshold = 1e-2;
  double y_min_m = 1.0;
  double v_max_mps = 30.0;
  double w_min = 0.1;
  double w_max = 1.0;
  MotionState initial_state{};
  MotionState initial_estimate{};
  double initial_mse_scale = 1e-3;
  std::uint64_t rng_seed = 1;
  int num_slots = 1000;
  int quadrature_nodes = 96;
  double quadrature_sigma_span = 8.0;

  /// Reference channel power gain (lambda / 4 pi)^2 at 1 m.
  double reference_gain() const;
  /// Normalised transmit SNR P_A * beta0 / sigma^2.
  double channel_snr() const;
  /// Maximum distance the UAV can cover in one slot.
  double reach_m() const { return v_max_mps * slot_s; }
  Mat4 initial_mse() const { return Mat4::Identity() * initial_mse_scale; }

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

enum class InnerBranchRule {
  kPredictionInfeasible,  // lower C_p when the prediction-stage OP exceeds the threshold
  kCompareStages,         // lower C_p when the prediction-stage OP is the larger one
};

struct OptimizerConfig {
  double tol_w = 1e-3;
  double tol_C = 1e-3;
  double tol_obj = 1e-3;
  int sca_max_iters = 50;
  double sca_curvature = 0.0;  // <= 0 selects the automatic rule
  double sca_step_tol = 1e-4;
  double fd_step = 1e-4;
  int max_outer_iters = 20;
  double golden_tol = 1e-3;
  double gamma_rel_tol = 1e-7;
  int w_grid_points = 9;
  InnerBranchRule inner_branch = InnerBranchRule::kPredictionInfeasible;

  void validate() const;
};

struct BenchmarkConfig {
  Vec2 hover_target{1.0, 1.0};
};

/// Parameters used by the CLI workflows; ignored by the library core.
struct ExperimentConfig {
  std::vector<Vec2> positions{{0.0, 3.0}, {0.0, 7.0}, {0.0, 15.0}};
  std::vector<Vec2> degraded_positions{{0.0, 3.0}};
  double sensing_ratio = 0.5;
  int gamma_points = 20;
  double op_low = 1e-3;
  double op_high = 0.9;
  long mc_trials = 100000;
  double op_tolerance = 0.03;

  double grid_x_min = -15.0;
  double grid_x_max = 15.0;
  double grid_y_min = 3.0;
  double grid_y_max = 20.0;
  double grid_step = 0.2;
  std::vector<int> map_n_tx{32, 64};
  double gamma_fraction = 0.975;
  double argmin_abs_x_low = 5.3;
  double argmin_abs_x_high = 6.3;

  double agreement_tol = 1e-2;

  std::vector<MotionState> initial_states{};
  // Per initial state: "interior" (trade-off peak), "flat" or "none".
  std::vector<std::string> sweep_expect{};
  int w_points = 19;
  double tradeoff_min_gain = 0.01;
  double flat_max_variation = 0.05;

  std::vector<std::string> policies{"proposed-ao", "sfh", "mpcrb", "msigma1"};
  int mc_runs = 20;
  int final_window = 500;
  int tail_window = 100;
  double superiority_gate = 0.0;  // <= 0 disables the gate
  double parallel_band_m = 0.5;
  double hover_radius_m = 0.5;
  double circle_variation = 0.10;
  // False turns every check of the workflow into a reported, non-gating one.
  bool gated = true;
};

struct Config {
  ScenarioConfig scenario{};
  OptimizerConfig optimizer{};
  BenchmarkConfig benchmark{};
  ExperimentConfig experiment{};
  std::string name = "default";
};

double dbm_to_watts(double dbm);

/// Parses a configuration document. Unknown keys and type mismatches raise
/// ConfigError.
Config config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const Config& cfg);

Config load_config(const std::filesystem::path& path);

/// Applies a `key=value` override to a JSON document. Nested keys use dots
/// (`optimizer.tol_w=1e-4`). The value is parsed as JSON when possible and
/// kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace isac
