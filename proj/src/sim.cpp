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

#include "isac/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "isac/benchmarks.hpp"
#include "isac/ekf.hpp"
#include "isac/outage.hpp"
#include "isac/parallel.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

constexpr double kZ95 = 1.959963984540054;

struct PolicyName {
  Policy policy;
  const char* name;
};
constexpr PolicyName kPolicyNames[] = {
    {Policy::kProposedSearch, "proposed-search"},
    {Policy::kProposedAo, "proposed-ao"},
    {Policy::kSfh, "sfh"},
    {Policy::kMpcrb, "mpcrb"},
    {Policy::kMsigma1, "msigma1"},
};

SlotDecision decide(Policy policy, const SlotInputs& in, const Config& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  try {
    switch (policy) {
      case Policy::kProposedSearch:
        return search_based_solve(in);
      case Policy::kProposedAo:
        return ao_solve(in);
      case Policy::kSfh:
        return decide_at(sfh_step(in.disk_center(), cfg.benchmark.hover_target, s), in, s.w_max);
      case Policy::kMpcrb:
        return decide_at(mpcrb_step(in), in, s.w_max);
      case Policy::kMsigma1:
        return decide_at(msigma1_step(in), in, s.w_max);
    }
  } catch (const InfeasibleError&) {
    // The reachable disk misses y >= y_min: climb as far as possible.
  }
  SlotDecision d = decide_at(in.disk_center() + Vec2(0.0, s.reach_m()), in, s.w_max);
  d.feasible = false;
  d.capacity = 0.0;
  return d;
}

}  // namespace

Policy parse_policy(std::string_view name) {
  for (const auto& p : kPolicyNames) {
    if (name == p.name) return p.policy;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

std::string policy_name(Policy p) {
  for (const auto& e : kPolicyNames) {
    if (e.policy == p) return e.name;
  }
  return "unknown";
}

double Proportion::wilson_center() const {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double z2 = kZ95 * kZ95;
  return (rate() + z2 / (2.0 * n)) / (1.0 + z2 / n);
}

double Proportion::wilson_half_width() const {
  if (trials == 0) return 1.0;
  const double n = static_cast<double>(trials);
  const double p = rate();
  const double z2 = kZ95 * kZ95;
  return kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
}

RunResult run(const Config& cfg, Policy policy, std::uint64_t seed) {
  const ScenarioConfig& s = cfg.scenario;
  s.validate();
  CounterRng process_rng = CounterRng::for_stream(seed, Stream::kProcess);
  CounterRng meas_rng = CounterRng::for_stream(seed, Stream::kMeasurement);

  RunResult out;
  out.policy = policy;
  out.seed = seed;
  out.slots.reserve(s.num_slots);

  MotionState truth = s.initial_state;
  EkfState est{s.initial_estimate, s.initial_mse()};
  Vec2 warm = est.estimate.position() +
              s.slot_s * Vec2(est.estimate.vx_mps, est.estimate.vy_mps);
  double capacity_sum = 0.0;

  for (int n = 1; n <= s.num_slots; ++n) {
    SlotInputs in{PlanningContext(est.estimate, est.mse, s), warm, &cfg.optimizer};
    const SlotDecision d = decide(policy, in, cfg);
    const MotionState predicted = planned_state(d.beam_pos, est.estimate, s.slot_s);
    const Vec4 u = control_input(predicted, est.estimate, s.slot_s);
    truth = evolve_state(truth, u, s, process_rng);

    SlotRecord rec;
    rec.slot = n;
    rec.truth = truth;
    rec.predicted = predicted;
    rec.w = d.w;
    rec.targets = d.targets;
    rec.approx_ops = d.ops;
    rec.capacity = d.capacity;
    rec.feasible = d.feasible;
    rec.solver_iterations = d.iterations;
    rec.p22_solves = d.p22_solves;
    rec.trace_prior = in.ctx.prior_mse.trace();

    EkfState next{predicted, in.ctx.prior_mse};
    try {
      rec.measurement = measure(truth, d.w, s, meas_rng);
      PredictionBundle b;
      b.predicted = predicted;
      b.prior_mse = in.ctx.prior_mse;
      b.jacobian = jacobian(predicted, s.altitude_m);
      b.meas_cov = diag_cov(meas_noise_vars(truth.position(), d.w, s));
      next = update(b, rec.measurement, s.altitude_m);
    } catch (const SingularityError&) {
      rec.valid = false;
    } catch (const NumericalError&) {
      rec.valid = false;
    }
    if (!rec.valid) ++out.invalid_slots;
    est = next;
    rec.estimate = est.estimate;
    rec.trace_post = est.mse.trace();

    rec.snr_pred = received_snr(truth.position(), d.beam_pos, s);
    rec.snr_est = received_snr(truth.position(), est.estimate.position(), s);
    rec.outage_pred = rec.snr_pred < d.targets.gamma_pred;
    rec.outage_est = rec.snr_est < d.targets.gamma_est;
    if (rec.feasible) {
      ++out.outage_pred.trials;
      ++out.outage_est.trials;
      out.outage_pred.events += rec.outage_pred;
      out.outage_est.events += rec.outage_est;
    }
    capacity_sum += rec.capacity;
    warm = d.beam_pos;
    out.slots.push_back(rec);
  }
  out.mean_capacity = s.num_slots > 0 ? capacity_sum / s.num_slots : 0.0;
  return out;
}

double MonteCarloAggregate::window_mean_capacity(int window) const {
  if (runs.empty()) return 0.0;
  double total = 0.0;
  for (const RunResult& r : runs) {
    const int n = static_cast<int>(r.slots.size());
    const int start = std::max(0, n - window);
    double sum = 0.0;
    for (int i = start; i < n; ++i) sum += r.slots[i].capacity;
    total += n > start ? sum / (n - start) : 0.0;
  }
  return total / static_cast<double>(runs.size());
}

MonteCarloAggregate monte_carlo_runs(const Config& cfg, Policy policy, int n_runs) {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be at least 1");
  MonteCarloAggregate agg;
  agg.runs.resize(n_runs);
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t i) {
    agg.runs[i] = run(cfg, policy, cfg.scenario.rng_seed + i);
  });
  const std::size_t slots = agg.runs.front().slots.size();
  agg.mean_capacity_per_slot.assign(slots, 0.0);
  for (const RunResult& r : agg.runs) {
    agg.outage_pred.events += r.outage_pred.events;
    agg.outage_pred.trials += r.outage_pred.trials;
    agg.outage_est.events += r.outage_est.events;
    agg.outage_est.trials += r.outage_est.trials;
    for (std::size_t k = 0; k < slots; ++k) agg.mean_capacity_per_slot[k] += r.slots[k].capacity;
  }
  for (double& c : agg.mean_capacity_per_slot) c /= n_runs;
  return agg;
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> slot_csv_header() {
  return {"slot",        "x",          "vx",         "y",          "vy",
          "x_pred",      "vx_pred",    "y_pred",     "vy_pred",    "azimuth_meas",
          "range_meas",  "x_est",      "vx_est",     "y_est",      "vy_est",
          "w",           "gamma_pred", "gamma_est",  "op_pred",    "op_est",
          "snr_pred",    "snr_est",    "outage_pred", "outage_est", "capacity",
          "trace_prior", "trace_post", "feasible",   "solver_iterations", "p22_solves",
          "valid"};
}

std::string slot_csv_row(const SlotRecord& r) {
  const double vals[] = {r.truth.x_m,          r.truth.vx_mps,       r.truth.y_m,
                         r.truth.vy_mps,       r.predicted.x_m,      r.predicted.vx_mps,
                         r.predicted.y_m,      r.predicted.vy_mps,   r.measurement.azimuth_rad,
                         r.measurement.range_m, r.estimate.x_m,      r.estimate.vx_mps,
                         r.estimate.y_m,       r.estimate.vy_mps,    r.w,
                         r.targets.gamma_pred, r.targets.gamma_est,  r.approx_ops.prediction,
                         r.approx_ops.estimation, r.snr_pred,        r.snr_est};
  std::string line = std::to_string(r.slot);
  for (double v : vals) line += "," + fmt9(v);
  line += r.outage_pred ? ",1" : ",0";
  line += r.outage_est ? ",1" : ",0";
  line += "," + fmt9(r.capacity) + "," + fmt9(r.trace_prior) + "," + fmt9(r.trace_post);
  line += r.feasible ? ",1" : ",0";
  line += "," + std::to_string(r.solver_iterations) + "," + std::to_string(r.p22_solves);
  line += r.valid ? ",1" : ",0";
  return line;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f << text;
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_run_csv(const std::filesystem::path& path, const RunResult& r) {
  std::ostringstream os;
  const auto header = slot_csv_header();
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const SlotRecord& rec : r.slots) os << slot_csv_row(rec) << "\n";
  write_file_atomic(path, os.str());
}

nlohmann::json run_metadata(const Config& cfg, const RunResult& r) {
  nlohmann::json j;
  j["policy"] = policy_name(r.policy);
  j["seed"] = r.seed;
  j["slots"] = r.slots.size();
  j["mean_capacity"] = r.mean_capacity;
  j["invalid_slots"] = r.invalid_slots;
  auto prop = [](const Proportion& p) {
    return nlohmann::json{{"events", p.events},
                          {"trials", p.trials},
                          {"rate", p.rate()},
                          {"wilson_center", p.wilson_center()},
                          {"wilson_half_width", p.wilson_half_width()}};
  };
  j["outage_pred"] = prop(r.outage_pred);
  j["outage_est"] = prop(r.outage_est);
  j["config"] = config_to_json(cfg);
  return j;
}

}  // namespace isac
