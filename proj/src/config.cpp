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

#include "isac/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace isac {

using nlohmann::json;

double ScenarioConfig::reference_gain() const {
  const double r = wavelength_m / (4.0 * std::numbers::pi);
  return r * r;
}

double ScenarioConfig::channel_snr() const {
  return transmit_power_W * reference_gain() / noise_power_W;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid configuration: " + what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Reads keys from one JSON object and remembers which ones were consumed so
// that leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string scope) : obj_(obj), scope_(std::move(scope)) {
    if (!obj_.is_object()) throw ConfigError(scope_ + ": expected a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    seen_.insert(key);
    try {
      out = convert<T>(*it);
    } catch (const json::exception& e) {
      throw ConfigError(scope_ + key + ": " + e.what());
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  const json* child(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + scope_ + it.key() + "'");
    }
  }

 private:
  template <typename T>
  static T convert(const json& j) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError("expected true or false");
      return j.get<bool>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!j.is_number()) throw ConfigError("expected a number");
      return j.get<double>();
    } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, long> ||
                         std::is_same_v<T, std::uint64_t>) {
      if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError("expected an integer");
      return j.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError("expected a string");
      return j.get<std::string>();
    } else if constexpr (std::is_same_v<T, Vec2>) {
      auto v = as_doubles(j, 2);
      return Vec2{v[0], v[1]};
    } else if constexpr (std::is_same_v<T, MotionState>) {
      auto v = as_doubles(j, 4);
      return MotionState{v[0], v[1], v[2], v[3]};
    } else if constexpr (std::is_same_v<T, std::vector<Vec2>>) {
      if (!j.is_array()) throw ConfigError("expected an array of points");
      std::vector<Vec2> out;
      for (const auto& e : j) out.push_back(convert<Vec2>(e));
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<MotionState>>) {
      if (!j.is_array()) throw ConfigError("expected an array of states");
      std::vector<MotionState> out;
      for (const auto& e : j) out.push_back(convert<MotionState>(e));
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<int>>) {
      if (!j.is_array()) throw ConfigError("expected an array of integers");
      std::vector<int> out;
      for (const auto& e : j) out.push_back(convert<int>(e));
      return out;
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      if (!j.is_array()) throw ConfigError("expected an array of strings");
      std::vector<std::string> out;
      for (const auto& e : j) out.push_back(convert<std::string>(e));
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config field type");
    }
  }

  static std::vector<double> as_doubles(const json& j, std::size_t n) {
    if (!j.is_array() || j.size() != n) {
      throw ConfigError("expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> v;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError("expected a number");
      v.push_back(e.get<double>());
    }
    return v;
  }

  const json& obj_;
  std::string scope_;
  std::set<std::string> seen_;
};

ScenarioConfig scenario_from(ObjectReader& r) {
  ScenarioConfig s;
  r.read("transmit_power_W", s.transmit_power_W);
  const bool has_w = r.has("noise_power_W");
  const bool has_dbm = r.has("noise_power_dBm");
  if (has_w && has_dbm) throw ConfigError("give either noise_power_W or noise_power_dBm, not both");
  r.read("noise_power_W", s.noise_power_W);
  if (has_dbm) {
    double dbm = 0.0;
    r.read("noise_power_dBm", dbm);
    s.noise_power_W = dbm_to_watts(dbm);
  }
  r.read("wavelength_m", s.wavelength_m);
  r.read("rcs_m2", s.rcs_m2);
  r.read("altitude_m", s.altitude_m);
  r.read("slot_s", s.slot_s);
  r.read("n_tx", s.n_tx);
  r.read("n_rx", s.n_rx);
  r.read("matched_filter_gain", s.matched_filter_gain);
  r.read("meas_coeff_angle", s.meas_coeff_angle);
  r.read("meas_coeff_range", s.meas_coeff_range);
  r.read("process_noise_intensity", s.process_noise_intensity);
  r.read("outage_threshold", s.outage_threshold);
  r.read("y_min_m", s.y_min_m);
  r.read("v_max_mps", s.v_max_mps);
  r.read("w_min", s.w_min);
  r.read("w_max", s.w_max);
  r.read("initial_state", s.initial_state);
  if (r.has("initial_estimate") && r.has("initial_estimate_offset")) {
    throw ConfigError("give either initial_estimate or initial_estimate_offset, not both");
  }
  s.initial_estimate = s.initial_state;
  r.read("initial_estimate", s.initial_estimate);
  if (r.has("initial_estimate_offset")) {
    MotionState off;
    r.read("initial_estimate_offset", off);
    s.initial_estimate = MotionState::from_vec(s.initial_state.vec() + off.vec());
  }
  r.read("initial_mse_scale", s.initial_mse_scale);
  r.read("rng_seed", s.rng_seed);
  r.read("num_slots", s.num_slots);
  r.read("quadrature_nodes", s.quadrature_nodes);
  r.read("quadrature_sigma_span", s.quadrature_sigma_span);
  return s;
}

OptimizerConfig optimizer_from(const json& j) {
  ObjectReader r(j, "optimizer.");
  OptimizerConfig o;
  r.read("tol_w", o.tol_w);
  r.read("tol_C", o.tol_C);
  r.read("tol_obj", o.tol_obj);
  r.read("sca_max_iters", o.sca_max_iters);
  r.read("sca_curvature", o.sca_curvature);
  r.read("sca_step_tol", o.sca_step_tol);
  r.read("fd_step", o.fd_step);
  r.read("max_outer_iters", o.max_outer_iters);
  r.read("golden_tol", o.golden_tol);
  r.read("gamma_rel_tol", o.gamma_rel_tol);
  r.read("w_grid_points", o.w_grid_points);
  std::string rule;
  r.read("inner_branch", rule);
  if (rule == "prediction-infeasible") {
    o.inner_branch = InnerBranchRule::kPredictionInfeasible;
  } else if (rule == "compare-stages") {
    o.inner_branch = InnerBranchRule::kCompareStages;
  } else if (!rule.empty()) {
    throw ConfigError("optimizer.inner_branch must be 'prediction-infeasible' or 'compare-stages'");
  }
  r.finish();
  return o;
}

ExperimentConfig experiment_from(const json& j) {
  ObjectReader r(j, "experiment.");
  ExperimentConfig e;
  r.read("positions", e.positions);
  r.read("degraded_positions", e.degraded_positions);
  r.read("sensing_ratio", e.sensing_ratio);
  r.read("gamma_points", e.gamma_points);
  r.read("op_low", e.op_low);
  r.read("op_high", e.op_high);
  r.read("mc_trials", e.mc_trials);
  r.read("op_tolerance", e.op_tolerance);
  r.read("grid_x_min", e.grid_x_min);
  r.read("grid_x_max", e.grid_x_max);
  r.read("grid_y_min", e.grid_y_min);
  r.read("grid_y_max", e.grid_y_max);
  r.read("grid_step", e.grid_step);
  r.read("map_n_tx", e.map_n_tx);
  r.read("gamma_fraction", e.gamma_fraction);
  r.read("argmin_abs_x_low", e.argmin_abs_x_low);
  r.read("argmin_abs_x_high", e.argmin_abs_x_high);
  r.read("agreement_tol", e.agreement_tol);
  r.read("initial_states", e.initial_states);
  r.read("sweep_expect", e.sweep_expect);
  r.read("w_points", e.w_points);
  r.read("tradeoff_min_gain", e.tradeoff_min_gain);
  r.read("flat_max_variation", e.flat_max_variation);
  r.read("policies", e.policies);
  r.read("mc_runs", e.mc_runs);
  r.read("final_window", e.final_window);
  r.read("tail_window", e.tail_window);
  r.read("superiority_gate", e.superiority_gate);
  r.read("parallel_band_m", e.parallel_band_m);
  r.read("hover_radius_m", e.hover_radius_m);
  r.read("circle_variation", e.circle_variation);
  r.read("gated", e.gated);
  for (const auto& k : e.sweep_expect) {
    if (k != "interior" && k != "flat" && k != "none") {
      throw ConfigError("experiment.sweep_expect entries must be interior, flat or none");
    }
  }
  r.finish();
  return e;
}

json vec_json(const Vec2& v) { return json::array({v(0), v(1)}); }
json state_json(const MotionState& s) { return json::array({s.x_m, s.vx_mps, s.y_m, s.vy_mps}); }

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void ScenarioConfig::validate() const {
  require(finite_positive(transmit_power_W), "transmit_power_W must be positive");
  require(finite_positive(noise_power_W), "noise_power_W must be positive");
  require(finite_positive(wavelength_m), "wavelength_m must be positive");
  require(finite_positive(rcs_m2), "rcs_m2 must be positive");
  require(finite_positive(altitude_m), "altitude_m must be positive");
  require(finite_positive(slot_s), "slot_s must be positive");
  require(n_tx >= 2, "n_tx must be at least 2");
  require(n_rx >= 1, "n_rx must be at least 1");
  require(finite_positive(matched_filter_gain), "matched_filter_gain must be positive");
  require(std::isfinite(meas_coeff_angle) && meas_coeff_angle >= 0.0,
          "meas_coeff_angle must be non-negative");
  require(std::isfinite(meas_coeff_range) && meas_coeff_range >= 0.0,
          "meas_coeff_range must be non-negative");
  require(std::isfinite(process_noise_intensity) && process_noise_intensity >= 0.0,
          "process_noise_intensity must be non-negative");
  require(outage_threshold > 0.0 && outage_threshold < 1.0, "outage_threshold must lie in (0, 1)");
  require(finite_positive(y_min_m), "y_min_m must be positive");
  require(finite_positive(v_max_mps), "v_max_mps must be positive");
  require(w_min > 0.0 && w_min <= w_max && w_max <= 1.0, "need 0 < w_min <= w_max <= 1");
  require(finite_positive(initial_mse_scale), "initial_mse_scale must be positive");
  require(num_slots >= 1, "num_slots must be at least 1");
  require(quadrature_nodes >= 2, "quadrature_nodes must be at least 2");
  require(finite_positive(quadrature_sigma_span), "quadrature_sigma_span must be positive");
  require(std::isfinite(channel_snr()) && channel_snr() > 0.0, "derived channel SNR must be positive");
}

void OptimizerConfig::validate() const {
  require(tol_w > 0 && tol_C > 0 && tol_obj > 0, "bisection tolerances must be positive");
  require(sca_max_iters >= 1, "sca_max_iters must be at least 1");
  require(sca_step_tol > 0 && fd_step > 0, "SCA tolerances must be positive");
  require(max_outer_iters >= 1, "max_outer_iters must be at least 1");
  require(golden_tol > 0 && gamma_rel_tol > 0, "search tolerances must be positive");
  require(w_grid_points >= 2, "w_grid_points must be at least 2");
}

Config config_from_json(const json& doc) {
  ObjectReader r(doc, "");
  Config cfg;
  r.read("name", cfg.name);
  cfg.scenario = scenario_from(r);
  if (const json* o = r.child("optimizer")) cfg.optimizer = optimizer_from(*o);
  if (const json* b = r.child("benchmark")) {
    ObjectReader br(*b, "benchmark.");
    br.read("hover_target", cfg.benchmark.hover_target);
    br.finish();
  }
  if (const json* e = r.child("experiment")) cfg.experiment = experiment_from(*e);
  r.finish();
  cfg.scenario.validate();
  cfg.optimizer.validate();
  return cfg;
}

json config_to_json(const Config& cfg) {
  const auto& s = cfg.scenario;
  const auto& o = cfg.optimizer;
  const auto& e = cfg.experiment;
  json doc;
  doc["name"] = cfg.name;
  doc["transmit_power_W"] = s.transmit_power_W;
  doc["noise_power_W"] = s.noise_power_W;
  doc["wavelength_m"] = s.wavelength_m;
  doc["rcs_m2"] = s.rcs_m2;
  doc["altitude_m"] = s.altitude_m;
  doc["slot_s"] = s.slot_s;
  doc["n_tx"] = s.n_tx;
  doc["n_rx"] = s.n_rx;
  doc["matched_filter_gain"] = s.matched_filter_gain;
  doc["meas_coeff_angle"] = s.meas_coeff_angle;
  doc["meas_coeff_range"] = s.meas_coeff_range;
  doc["process_noise_intensity"] = s.process_noise_intensity;
  doc["outage_threshold"] = s.outage_threshold;
  doc["y_min_m"] = s.y_min_m;
  doc["v_max_mps"] = s.v_max_mps;
  doc["w_min"] = s.w_min;
  doc["w_max"] = s.w_max;
  doc["initial_state"] = state_json(s.initial_state);
  doc["initial_estimate"] = state_json(s.initial_estimate);
  doc["initial_mse_scale"] = s.initial_mse_scale;
  doc["rng_seed"] = s.rng_seed;
  doc["num_slots"] = s.num_slots;
  doc["quadrature_nodes"] = s.quadrature_nodes;
  doc["quadrature_sigma_span"] = s.quadrature_sigma_span;

  doc["optimizer"] = {
      {"tol_w", o.tol_w},
      {"tol_C", o.tol_C},
      {"tol_obj", o.tol_obj},
      {"sca_max_iters", o.sca_max_iters},
      {"sca_curvature", o.sca_curvature},
      {"sca_step_tol", o.sca_step_tol},
      {"fd_step", o.fd_step},
      {"max_outer_iters", o.max_outer_iters},
      {"golden_tol", o.golden_tol},
      {"gamma_rel_tol", o.gamma_rel_tol},
      {"w_grid_points", o.w_grid_points},
      {"inner_branch", o.inner_branch == InnerBranchRule::kPredictionInfeasible
                           ? "prediction-infeasible"
                           : "compare-stages"},
  };
  doc["benchmark"] = {{"hover_target", vec_json(cfg.benchmark.hover_target)}};

  json positions = json::array();
  for (const auto& p : e.positions) positions.push_back(vec_json(p));
  json degraded = json::array();
  for (const auto& p : e.degraded_positions) degraded.push_back(vec_json(p));
  json states = json::array();
  for (const auto& st : e.initial_states) states.push_back(state_json(st));
  doc["experiment"] = {
      {"positions", positions},
      {"degraded_positions", degraded},
      {"sensing_ratio", e.sensing_ratio},
      {"gamma_points", e.gamma_points},
      {"op_low", e.op_low},
      {"op_high", e.op_high},
      {"mc_trials", e.mc_trials},
      {"op_tolerance", e.op_tolerance},
      {"grid_x_min", e.grid_x_min},
      {"grid_x_max", e.grid_x_max},
      {"grid_y_min", e.grid_y_min},
      {"grid_y_max", e.grid_y_max},
      {"grid_step", e.grid_step},
      {"map_n_tx", e.map_n_tx},
      {"gamma_fraction", e.gamma_fraction},
      {"argmin_abs_x_low", e.argmin_abs_x_low},
      {"argmin_abs_x_high", e.argmin_abs_x_high},
      {"agreement_tol", e.agreement_tol},
      {"initial_states", states},
      {"sweep_expect", e.sweep_expect},
      {"w_points", e.w_points},
      {"tradeoff_min_gain", e.tradeoff_min_gain},
      {"flat_max_variation", e.flat_max_variation},
      {"policies", e.policies},
      {"mc_runs", e.mc_runs},
      {"final_window", e.final_window},
      {"tail_window", e.tail_window},
      {"superiority_gate", e.superiority_gate},
      {"parallel_band_m", e.parallel_band_m},
      {"hover_radius_m", e.hover_radius_m},
      {"circle_variation", e.circle_variation},
      {"gated", e.gated},
  };
  return doc;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    node = &(*node)[parts[i]];
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("override path '" + key + "' crosses a non-object value");
    }
  }
  (*node)[parts.back()] = std::move(value);
}

}  // namespace isac
