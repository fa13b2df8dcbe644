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

#include "isac/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

#include "isac/ekf.hpp"
#include "isac/model.hpp"
#include "isac/optimizer.hpp"
#include "isac/outage.hpp"
#include "isac/parallel.hpp"
#include "isac/rng.hpp"
#include "isac/simd/kernels.hpp"

namespace isac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kChunk = 4096;
constexpr double kMonotoneSlack = 1e-9;

std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { text_ << join(header) << "\n"; }
  void row(const std::vector<std::string>& cols) { text_ << join(cols) << "\n"; }
  void save(const fs::path& out, const std::string& name) const {
    if (!out.empty()) write_file_atomic(out / name, text_.str());
  }

 private:
  std::ostringstream text_;
};

void save_json(const fs::path& out, const std::string& name, const json& j) {
  if (!out.empty()) write_file_atomic(out / name, j.dump(1) + "\n");
}

void save_report(const fs::path& out, const Report& r) {
  save_json(out, r.experiment + "_report.json", r.to_json());
}

std::string num(double v) { return fmt9(v); }

std::string point(const Vec2& p) { return "(" + num(p(0)) + ", " + num(p(1)) + ")"; }

SlotInputs first_slot_inputs(const Config& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  const MotionState& e = s.initial_estimate;
  return {PlanningContext(e, s.initial_mse(), s),
          e.position() + s.slot_s * Vec2(e.vx_mps, e.vy_mps), &cfg.optimizer};
}

// scale * (A A^T + floor * I) with standard normal A.
Mat4 random_spd(CounterRng& rng, double scale, double floor) {
  Mat4 a;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) a(i, j) = rng.normal();
  }
  return (a * a.transpose() + floor * Mat4::Identity()) * scale;
}

// Target SNR at which an OP curve reaches `level`.
template <class OpFn>
double gamma_at_level(OpFn&& op, double level, double hi) {
  double lo = 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-12 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (op(mid) < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Realised SNRs of one slot simulated from the initial estimate: initial
// error, process noise, measurement noise and the EKF update.
struct SlotSnrs {
  std::vector<double> pred;
  std::vector<double> est;
};

SlotSnrs one_slot_snrs(const Vec2& beam, const MotionState& prev_est, const PlanningContext& ctx,
                       double w, const ScenarioConfig& s, std::size_t n, std::uint64_t seed) {
  const Mat4 l0 = s.initial_mse().llt().matrixL();
  const MotionState predicted = planned_state(beam, prev_est, s.slot_s);
  const Vec4 u = control_input(predicted, prev_est, s.slot_s);
  PredictionBundle b;
  b.predicted = predicted;
  b.prior_mse = ctx.prior_mse;
  b.jacobian = jacobian(predicted, s.altitude_m);
  const std::uint64_t k_init = CounterRng::for_stream(seed, Stream::kInit).key();
  const std::uint64_t k_proc = CounterRng::for_stream(seed, Stream::kProcess).key();
  const std::uint64_t k_meas = CounterRng::for_stream(seed, Stream::kMeasurement).key();

  SlotSnrs out;
  out.pred.resize(n);
  out.est.resize(n);
  parallel_for((n + kChunk - 1) / kChunk, [&](std::size_t c) {
    PredictionBundle local = b;
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
      CounterRng init(k_init, 4 * i);
      const Vec4 z{init.normal(), init.normal(), init.normal(), init.normal()};
      const MotionState x0 = MotionState::from_vec(prev_est.vec() + l0 * z);
      CounterRng proc(k_proc, 4 * i);
      const MotionState truth = evolve_state(x0, u, s, proc);
      out.pred[i] = received_snr(truth.position(), beam, s);
      try {
        CounterRng mr(k_meas, 2 * i);
        const Measurement m = measure(truth, w, s, mr);
        local.meas_cov = diag_cov(meas_noise_vars(truth.position(), w, s));
        const EkfState next = update(local, m, s.altitude_m);
        out.est[i] = received_snr(truth.position(), next.estimate.position(), s);
      } catch (const SingularityError&) {
        out.est[i] = 0.0;
      } catch (const NumericalError&) {
        out.est[i] = 0.0;
      }
    }
  });
  std::sort(out.pred.begin(), out.pred.end());
  std::sort(out.est.begin(), out.est.end());
  return out;
}

double fraction_below(const std::vector<double>& sorted, double gamma) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), gamma);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

bool is_proposed(Policy p) { return p == Policy::kProposedAo || p == Policy::kProposedSearch; }

std::vector<Policy> parse_policies(const ExperimentConfig& e) {
  std::vector<Policy> out;
  for (const auto& name : e.policies) out.push_back(parse_policy(name));
  if (out.empty()) throw ConfigError("experiment.policies is empty");
  return out;
}

double rel_frobenius(const Mat4& a, const Mat4& b) {
  return (a - b).norm() / std::max(a.norm(), std::numeric_limits<double>::min());
}

}  // namespace

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const Check& c) { return !c.gated || c.passed; });
}

const Check* Report::find(const std::string& name) const {
  for (const Check& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

void Report::add(std::string name, bool ok, std::string detail, bool gated) {
  checks.push_back({std::move(name), gated, ok, std::move(detail)});
}

json Report::to_json() const {
  json rows = json::array();
  for (const Check& c : checks) {
    rows.push_back({{"name", c.name}, {"gated", c.gated}, {"passed", c.passed}, {"detail", c.detail}});
  }
  return {{"experiment", experiment}, {"passed", passed()}, {"checks", rows}, {"summary", summary}};
}

std::string Report::table() const {
  std::string s;
  for (const Check& c : checks) {
    s += !c.gated ? "INFO  " : c.passed ? "PASS  " : "FAIL  ";
    s += c.name + "  " + c.detail + "\n";
  }
  return s;
}

Report validate_op(const Config& cfg, const fs::path& out) {
  const ScenarioConfig& s = cfg.scenario;
  const ExperimentConfig& e = cfg.experiment;
  if (e.gamma_points < 1) throw ConfigError("experiment.gamma_points must be at least 1");
  if (e.positions.empty()) throw ConfigError("experiment.positions is empty");
  if (e.mc_trials < 1) throw ConfigError("experiment.mc_trials must be at least 1");
  if (!(e.op_low > 0.0 && e.op_low < e.op_high && e.op_high < 1.0)) {
    throw ConfigError("need 0 < experiment.op_low < experiment.op_high < 1");
  }
  const double w = e.sensing_ratio;
  const double snr_ceiling = s.channel_snr() * s.n_tx / (s.altitude_m * s.altitude_m);

  Report rep{"validate-op"};
  CsvWriter csv({"x", "y", "stage", "gamma", "op_approx", "op_mc", "abs_diff", "op_slot_sim",
                 "gated"});
  for (std::size_t pi = 0; pi < e.positions.size(); ++pi) {
    const Vec2 q = e.positions[pi];
    const bool degraded =
        std::any_of(e.degraded_positions.begin(), e.degraded_positions.end(),
                    [&](const Vec2& d) { return (d - q).norm() < 1e-9; });
    const MotionState prev{q(0), 0.0, q(1), 0.0};
    const PlanningContext ctx(prev, s.initial_mse(), s);
    const SlotSnrs sim = one_slot_snrs(q, prev, ctx, w, s, static_cast<std::size_t>(e.mc_trials),
                                       s.rng_seed + pi);
    const PositionGaussian stage_pos[2] = {{q, ctx.prediction_cov()}, {q, ctx.estimation_cov(q, w)}};
    const std::vector<double>* stage_sim[2] = {&sim.pred, &sim.est};
    const char* stage_name[2] = {"prediction", "estimation"};

    for (int st = 0; st < 2; ++st) {
      const CounterRng rng = CounterRng::for_stream(s.rng_seed + pi + 1000 * (st + 1), Stream::kMonteCarlo);
      auto op = [&](double g) { return approx_op(q, g, stage_pos[st], s); };
      const double g_lo = gamma_at_level(op, e.op_low, snr_ceiling);
      const double g_hi = gamma_at_level(op, e.op_high, snr_ceiling);
      double worst = 0.0;
      double worst_gamma = g_lo;
      double worst_sim = 0.0;
      for (int k = 0; k < e.gamma_points; ++k) {
        const double g =
            e.gamma_points == 1 ? g_lo : g_lo + (g_hi - g_lo) * k / (e.gamma_points - 1);
        const double a = op(g);
        const double m = mc_op(q, g, stage_pos[st], s, static_cast<std::uint64_t>(e.mc_trials), rng);
        const double slot = fraction_below(*stage_sim[st], g);
        const double d = std::abs(a - m);
        if (d > worst) {
          worst = d;
          worst_gamma = g;
        }
        worst_sim = std::max(worst_sim, std::abs(a - slot));
        csv.row({num(q(0)), num(q(1)), stage_name[st], num(g), num(a), num(m), num(d), num(slot),
                 degraded ? "0" : "1"});
      }
      const std::string tag = std::string(stage_name[st]) + " " + point(q);
      std::string detail = "max |approx - MC| = " + num(worst) + " at gamma " + num(worst_gamma) +
                           " (limit " + num(e.op_tolerance) + ")";
      if (degraded) detail += " known-degraded";
      rep.add("op " + tag, worst <= e.op_tolerance, detail, e.gated && !degraded);
      rep.add("one-slot simulation " + tag, worst_sim <= e.op_tolerance,
              "max |approx - simulated slot| = " + num(worst_sim), false);
    }
  }
  csv.save(out, "validate_op.csv");
  save_json(out, "validate_op.json", {{"report", rep.to_json()}, {"config", config_to_json(cfg)}});
  save_report(out, rep);
  return rep;
}

Report op_map(const Config& cfg, const fs::path& out) {
  const ExperimentConfig& e = cfg.experiment;
  if (!(e.grid_step > 0.0) || e.grid_x_max < e.grid_x_min || e.grid_y_max < e.grid_y_min) {
    throw ConfigError("op-map needs a positive grid_step and ordered grid bounds");
  }
  if (e.map_n_tx.empty()) throw ConfigError("experiment.map_n_tx is empty");
  const int nx = static_cast<int>(std::lround((e.grid_x_max - e.grid_x_min) / e.grid_step)) + 1;
  const int ny = static_cast<int>(std::lround((e.grid_y_max - e.grid_y_min) / e.grid_step)) + 1;
  const double level = 0.5 * cfg.scenario.outage_threshold;

  Report rep{"op-map"};
  CsvWriter csv({"reference", "n_tx", "x", "y", "op"});
  std::vector<std::pair<int, long>> low_counts;
  // "gamma_max": target 0.975 * P~ N / (y_min^2 + H^2); "los_peak": the same
  // fraction of P~ N / H^2.
  for (const char* reference : {"gamma_max", "los_peak"}) {
    const bool literal = std::string(reference) == "gamma_max";
    for (int n_tx : e.map_n_tx) {
      ScenarioConfig s = cfg.scenario;
      s.n_tx = n_tx;
      const double peak = literal ? gamma_max(s)
                                  : s.channel_snr() * n_tx / (s.altitude_m * s.altitude_m);
      const double gamma = e.gamma_fraction * peak;
      const PlanningContext ctx(s.initial_estimate, s.initial_mse(), s);
      const Mat2 lam = ctx.prediction_cov();
      std::vector<double> op(static_cast<std::size_t>(nx) * ny);
      parallel_for(static_cast<std::size_t>(ny), [&](std::size_t j) {
        for (int i = 0; i < nx; ++i) {
          const Vec2 q{e.grid_x_min + i * e.grid_step, e.grid_y_min + j * e.grid_step};
          op[j * nx + i] = approx_op(q, gamma, {q, lam}, s);
        }
      });
      std::size_t best = 0;
      double asym = 0.0;
      long low = 0;
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          const std::size_t k = static_cast<std::size_t>(j) * nx + i;
          if (op[k] < op[best]) best = k;
          asym = std::max(asym, std::abs(op[k] - op[static_cast<std::size_t>(j) * nx + (nx - 1 - i)]));
          low += op[k] < level;
          if (literal) {
            csv.row({reference, std::to_string(n_tx), num(e.grid_x_min + i * e.grid_step),
                     num(e.grid_y_min + j * e.grid_step), num(op[k])});
          }
        }
      }
      const Vec2 arg{e.grid_x_min + static_cast<double>(best % nx) * e.grid_step,
                     e.grid_y_min + static_cast<double>(best / nx) * e.grid_step};
      const bool on_floor = std::abs(arg(1) - e.grid_y_min) < 1e-9;
      const bool in_band =
          std::abs(arg(0)) >= e.argmin_abs_x_low - 1e-9 && std::abs(arg(0)) <= e.argmin_abs_x_high + 1e-9;
      const std::string tag = " n_tx=" + std::to_string(n_tx);
      const std::string detail = "argmin " + point(arg) + " op " + num(op[best]) + ", gamma " +
                                 num(gamma) + ", band |x| in [" + num(e.argmin_abs_x_low) + ", " +
                                 num(e.argmin_abs_x_high) + "] at y = " + num(e.grid_y_min);
      if (literal) {
        rep.add("argmin" + tag, on_floor && in_band, detail, e.gated);
        rep.add("mirror symmetry" + tag, asym <= 1e-9, "max |op(x) - op(-x)| = " + num(asym),
                e.gated);
        low_counts.push_back({n_tx, low});
        rep.summary["argmin"][std::to_string(n_tx)] = {arg(0), arg(1), op[best]};
      } else {
        rep.add("argmin, P~N/H^2 reference" + tag, on_floor && in_band, detail, false);
      }
    }
  }
  std::sort(low_counts.begin(), low_counts.end());
  bool shrinking = true;
  std::string counts;
  for (std::size_t k = 0; k < low_counts.size(); ++k) {
    if (k > 0 && low_counts[k].second >= low_counts[k - 1].second) shrinking = false;
    counts += (k ? ", " : "") + std::to_string(low_counts[k].first) + ": " +
              std::to_string(low_counts[k].second);
  }
  rep.add("low-OP region shrinks with n_tx", shrinking,
          "cells with op < " + num(level) + " (" + counts + ")", e.gated);
  csv.save(out, "op_map.csv");
  save_report(out, rep);
  return rep;
}

Report convergence(const Config& cfg, const fs::path& out) {
  const SlotInputs in = first_slot_inputs(cfg);
  const SlotDecision ao = ao_solve(in);
  const SlotDecision sb = search_based_solve(in);
  const ExperimentConfig& e = cfg.experiment;

  CsvWriter csv({"solver", "iteration", "objective"});
  for (std::size_t k = 0; k < ao.objective_history.size(); ++k) {
    csv.row({"proposed-ao", std::to_string(k + 1), num(ao.objective_history[k])});
  }
  for (std::size_t k = 0; k < sb.objective_history.size(); ++k) {
    csv.row({"proposed-search", std::to_string(k + 1), num(sb.objective_history[k])});
  }
  CsvWriter trials({"iteration", "trial_objective"});
  for (std::size_t k = 0; k < sb.trial_history.size(); ++k) {
    trials.row({std::to_string(k + 1), num(sb.trial_history[k])});
  }

  Report rep{"convergence"};
  const double gap = std::abs(ao.capacity - sb.capacity);
  rep.add("solver agreement", gap <= e.agreement_tol,
          "search " + num(sb.capacity) + ", AO " + num(ao.capacity) + ", |diff| " + num(gap) +
              " (limit " + num(e.agreement_tol) + ")",
          e.gated);
  bool monotone = true;
  for (std::size_t k = 1; k < sb.objective_history.size(); ++k) {
    monotone = monotone &&
               sb.objective_history[k] >= sb.objective_history[k - 1] - cfg.optimizer.tol_obj;
  }
  rep.add("search objective monotone", monotone && !sb.objective_history.empty(),
          std::to_string(sb.objective_history.size()) + " outer iterations", e.gated);
  rep.add("AO uses fewer P2.2 solves", ao.p22_solves < sb.p22_solves,
          "AO " + std::to_string(ao.p22_solves) + ", search " + std::to_string(sb.p22_solves),
          e.gated);
  const long bound = search_iteration_bound(cfg.scenario, cfg.optimizer);
  rep.add("search within iteration bound", sb.p22_solves <= bound,
          std::to_string(sb.p22_solves) + " of " + std::to_string(bound), false);

  auto decision_json = [](const SlotDecision& d) {
    return json{{"capacity", d.capacity},
                {"w", d.w},
                {"beam_pos", {d.beam_pos(0), d.beam_pos(1)}},
                {"gamma_pred", d.targets.gamma_pred},
                {"gamma_est", d.targets.gamma_est},
                {"op_pred", d.ops.prediction},
                {"op_est", d.ops.estimation},
                {"feasible", d.feasible},
                {"iterations", d.iterations},
                {"p22_solves", d.p22_solves}};
  };
  rep.summary = {{"proposed-ao", decision_json(ao)},
                 {"proposed-search", decision_json(sb)},
                 {"iteration_bound", bound}};
  csv.save(out, "convergence.csv");
  trials.save(out, "search_trials.csv");
  save_json(out, "convergence.json", {{"report", rep.to_json()}, {"config", config_to_json(cfg)}});
  save_report(out, rep);
  return rep;
}

Report sweep_w(const Config& cfg, const fs::path& out) {
  const ExperimentConfig& e = cfg.experiment;
  if (e.w_points < 2) throw ConfigError("experiment.w_points must be at least 2");
  std::vector<MotionState> states = e.initial_states;
  if (states.empty()) states.push_back(cfg.scenario.initial_state);
  if (!e.sweep_expect.empty() && e.sweep_expect.size() != states.size()) {
    throw ConfigError("experiment.sweep_expect needs one entry per initial state");
  }
  const Vec4 offset = cfg.scenario.initial_estimate.vec() - cfg.scenario.initial_state.vec();

  Report rep{"sweep-w"};
  CsvWriter csv({"state", "x0", "y0", "w", "capacity", "gamma_pred", "gamma_est", "ao_w"});
  for (std::size_t si = 0; si < states.size(); ++si) {
    Config c = cfg;
    c.scenario.initial_state = states[si];
    c.scenario.initial_estimate = MotionState::from_vec(states[si].vec() + offset);
    const SlotInputs in = first_slot_inputs(c);
    const SlotDecision ao = ao_solve(in);
    std::vector<double> caps;
    const ScenarioConfig& s = c.scenario;
    for (int k = 0; k < e.w_points; ++k) {
      const double w = s.w_min + (s.w_max - s.w_min) * k / (e.w_points - 1);
      const P31Result r = solve_p31(ao.beam_pos, in, w);
      caps.push_back(r.capacity);
      csv.row({std::to_string(si), num(states[si].x_m), num(states[si].y_m), num(w), num(r.capacity),
               num(r.targets.gamma_pred), num(r.targets.gamma_est), num(ao.w)});
    }
    const auto [mn, mx] = std::minmax_element(caps.begin(), caps.end());
    const double first = caps.front();
    const double last = caps.back();
    const std::string tag = " x0=" + point(states[si].position());
    const std::string kind = e.sweep_expect.empty() ? "none" : e.sweep_expect[si];
    const std::string shape = "C(w_min) " + num(first) + ", C(w_max) " + num(last) + ", max " +
                              num(*mx) + " at w index " + std::to_string(mx - caps.begin()) +
                              ", min " + num(*mn);
    const double variation = *mx > 0.0 ? (*mx - *mn) / *mx : 0.0;
    if (kind == "interior") {
      const bool interior = mx != caps.begin() && mx != caps.end() - 1;
      const double gain = std::min(*mx / first, *mx / last) - 1.0;
      rep.add("interior maximiser" + tag, interior && gain >= e.tradeoff_min_gain,
              shape + ", gain over endpoints " + num(gain) + " (need " + num(e.tradeoff_min_gain) +
                  ")",
              e.gated);
    } else if (kind == "flat") {
      rep.add("flat curve" + tag, variation <= e.flat_max_variation,
              shape + ", variation " + num(variation) + " (limit " + num(e.flat_max_variation) + ")",
              e.gated);
    } else {
      rep.add("curve" + tag, true, shape + ", variation " + num(variation), false);
    }
  }
  csv.save(out, "sweep_w.csv");
  save_json(out, "sweep_w.json", {{"report", rep.to_json()}, {"config", config_to_json(cfg)}});
  save_report(out, rep);
  return rep;
}

Report track_report(const Config& cfg, const std::map<Policy, RunResult>& runs) {
  const ExperimentConfig& e = cfg.experiment;
  const double y_min = cfg.scenario.y_min_m;
  Report rep{"track"};
  auto tail = [](const RunResult& r, int window) {
    const int n = static_cast<int>(r.slots.size());
    return std::vector<SlotRecord>(r.slots.begin() + std::max(0, n - window), r.slots.end());
  };
  for (const auto& [policy, r] : runs) {
    const std::string name = policy_name(policy);
    if (is_proposed(policy)) {
      double y_max = -std::numeric_limits<double>::infinity();
      double y_sum = 0.0;
      const auto slots = tail(r, e.tail_window);
      for (const SlotRecord& s : slots) {
        y_max = std::max(y_max, s.predicted.y_m);
        y_sum += s.predicted.y_m;
      }
      rep.add(name + " parallel to the array", !slots.empty() && y_max <= y_min + e.parallel_band_m,
              "final " + std::to_string(slots.size()) + " slots: max y " + num(y_max) + ", mean y " +
                  num(y_sum / std::max<std::size_t>(1, slots.size())) + " (limit " +
                  num(y_min + e.parallel_band_m) + ")",
              e.gated);
    } else if (policy == Policy::kMsigma1) {
      const Vec2 spot{0.0, y_min};
      double far = 0.0;
      const auto slots = tail(r, e.tail_window);
      for (const SlotRecord& s : slots) far = std::max(far, (s.predicted.position() - spot).norm());
      rep.add(name + " hovers near " + point(spot), !slots.empty() && far <= e.hover_radius_m,
              "final " + std::to_string(slots.size()) + " slots: max distance " + num(far) +
                  " (limit " + num(e.hover_radius_m) + ")",
              e.gated);
    } else if (policy == Policy::kMpcrb) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = 0.0;
      double sum = 0.0;
      const auto slots = tail(r, e.final_window);
      for (const SlotRecord& s : slots) {
        const double rad = s.predicted.position().norm();
        lo = std::min(lo, rad);
        hi = std::max(hi, rad);
        sum += rad;
      }
      const double mean = sum / std::max<std::size_t>(1, slots.size());
      const double variation = mean > 0.0 ? (hi - lo) / mean : 0.0;
      rep.add(name + " approximately circular",
              !slots.empty() && variation < e.circle_variation,
              "final " + std::to_string(slots.size()) + " slots: radius " + num(lo) + " to " +
                  num(hi) + ", variation " + num(variation) + " (limit " +
                  num(e.circle_variation) + ")",
              e.gated);
    } else {
      const Vec2 end = r.slots.empty() ? Vec2::Zero() : r.slots.back().predicted.position();
      rep.add(name + " final position", true,
              point(end) + ", target " + point(cfg.benchmark.hover_target), false);
    }
    rep.summary[name] = {{"mean_capacity", r.mean_capacity}, {"invalid_slots", r.invalid_slots}};
  }
  return rep;
}

Report track(const Config& cfg, const fs::path& out) {
  std::map<Policy, RunResult> runs;
  for (Policy p : parse_policies(cfg.experiment)) {
    RunResult r = run(cfg, p);
    if (!out.empty()) {
      write_run_csv(out / ("track_" + policy_name(p) + ".csv"), r);
      save_json(out, "track_" + policy_name(p) + ".json", run_metadata(cfg, r));
    }
    runs.emplace(p, std::move(r));
  }
  Report rep = track_report(cfg, runs);
  save_report(out, rep);
  return rep;
}

Report compare_report(const Config& cfg, const std::map<Policy, MonteCarloAggregate>& runs) {
  const ExperimentConfig& e = cfg.experiment;
  const double eps = cfg.scenario.outage_threshold;
  Report rep{"compare"};
  const auto proposed = std::find_if(runs.begin(), runs.end(),
                                     [](const auto& kv) { return is_proposed(kv.first); });
  for (const auto& [policy, agg] : runs) {
    const std::string name = policy_name(policy);
    const double mean = agg.window_mean_capacity(e.final_window);
    rep.summary[name] = {{"runs", agg.runs.size()},
                         {"final_window_mean_capacity", mean},
                         {"outage_pred", {agg.outage_pred.events, agg.outage_pred.trials}},
                         {"outage_est", {agg.outage_est.events, agg.outage_est.trials}}};
    if (proposed != runs.end() && policy != proposed->first) {
      const double lead = proposed->second.window_mean_capacity(e.final_window) - mean;
      rep.add(policy_name(proposed->first) + " beats " + name, lead >= e.superiority_gate,
              "final-" + std::to_string(e.final_window) + "-slot mean lead " + num(lead) +
                  " bps/Hz (need " + num(e.superiority_gate) + ")",
              e.gated && e.superiority_gate > 0.0);
    }
  }
  for (const auto& [policy, agg] : runs) {
    const std::pair<const char*, const Proportion*> stages[] = {{"prediction", &agg.outage_pred},
                                                                {"estimation", &agg.outage_est}};
    for (const auto& [stage, p] : stages) {
      const double limit = eps + 2.0 * p->wilson_half_width();
      rep.add("outage " + policy_name(policy) + " " + stage, p->rate() <= limit,
              std::to_string(p->events) + "/" + std::to_string(p->trials) + " = " + num(p->rate()) +
                  " (limit " + num(limit) + ")",
              e.gated);
    }
  }
  return rep;
}

Report compare_outputs(const Config& cfg, const std::map<Policy, MonteCarloAggregate>& runs,
                       const fs::path& out) {
  std::vector<std::string> header{"slot"};
  for (const auto& kv : runs) header.push_back(policy_name(kv.first));
  CsvWriter mean_csv(header);
  CsvWriter single_csv(header);
  const std::size_t slots = runs.begin()->second.mean_capacity_per_slot.size();
  for (std::size_t k = 0; k < slots; ++k) {
    std::vector<std::string> m{std::to_string(k + 1)};
    std::vector<std::string> one{std::to_string(k + 1)};
    for (const auto& [p, agg] : runs) {
      m.push_back(num(agg.mean_capacity_per_slot[k]));
      one.push_back(num(agg.runs.front().slots[k].capacity));
    }
    mean_csv.row(m);
    single_csv.row(one);
  }
  if (!out.empty()) {
    for (const auto& [p, agg] : runs) {
      write_run_csv(out / ("compare_" + policy_name(p) + "_run0.csv"), agg.runs.front());
      save_json(out, "compare_" + policy_name(p) + "_run0.json", run_metadata(cfg, agg.runs.front()));
    }
  }
  Report rep = compare_report(cfg, runs);
  mean_csv.save(out, "capacity_mc.csv");
  single_csv.save(out, "capacity_single.csv");
  save_json(out, "compare.json", {{"report", rep.to_json()}, {"config", config_to_json(cfg)}});
  save_report(out, rep);
  return rep;
}

Report compare(const Config& cfg, const fs::path& out) {
  const ExperimentConfig& e = cfg.experiment;
  if (e.mc_runs < 1) throw ConfigError("experiment.mc_runs must be at least 1");
  std::map<Policy, MonteCarloAggregate> runs;
  for (Policy p : parse_policies(e)) runs.emplace(p, monte_carlo_runs(cfg, p, e.mc_runs));
  return compare_outputs(cfg, runs, out);
}

Report proposition2_check(int draws, int gamma_points, std::uint64_t seed) {
  Report rep{"proposition-2"};
  CounterRng rng(CounterRng::mix(seed));
  const int n_tx_choices[] = {16, 32, 64};
  long violations = 0;
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    ScenarioConfig s;
    s.n_tx = s.n_rx = n_tx_choices[d % 3];
    s.meas_coeff_angle = s.meas_coeff_range = 0.1 + 0.9 * rng.uniform_at(2 * d);
    const Vec2 q{15.0 * (2.0 * rng.uniform_at(2 * d + 1) - 1.0),
                 s.y_min_m + 19.0 * rng.uniform_at(1000003 + d)};
    const double w = s.w_min + (s.w_max - s.w_min) * rng.uniform_at(2000003 + d);
    const double scale = std::pow(10.0, -5.0 + 3.0 * rng.uniform_at(3000003 + d));
    const PlanningContext ctx({q(0), 0.0, q(1), 0.0}, random_spd(rng, scale, 1e-6), s);
    const PositionGaussian stages[2] = {{q, ctx.prediction_cov()}, {q, ctx.estimation_cov(q, w)}};
    const double top = gamma_max(s);
    for (const PositionGaussian& pos : stages) {
      double prev = 0.0;
      for (int k = 1; k <= gamma_points; ++k) {
        const double op = approx_op(q, top * k / gamma_points, pos, s);
        if (op < prev - kMonotoneSlack) ++violations;
        worst = std::max(worst, prev - op);
        prev = op;
      }
    }
  }
  rep.add("OP nondecreasing in gamma", violations == 0,
          std::to_string(draws) + " draws x " + std::to_string(gamma_points) +
              " gammas x 2 stages, largest decrease " + num(worst) + " (slack " +
              num(kMonotoneSlack) + ")");
  return rep;
}

Report ekf_identity_check(int instances, std::uint64_t seed) {
  Report rep{"ekf-identities"};
  CounterRng rng(CounterRng::mix(seed + 1));
  double worst_form = 0.0;
  double worst_jac = 0.0;
  int fallbacks = 0;
  for (int k = 0; k < instances; ++k) {
    const Mat4 mp = random_spd(rng, 1.0, 0.05);
    const Vec2 p{6.0 * rng.normal(), 1.0 + 20.0 * rng.uniform_at(2 * k)};
    const Mat24 h = jacobian({p(0), 0, p(1), 0}, 50.0);
    Mat2 q = Mat2::Zero();
    q(0, 0) = 1e-4 + rng.uniform_at(2 * k + 1);
    q(1, 1) = 1e-3 + std::abs(rng.normal());
    bool fb = false;
    worst_form = std::max(worst_form, rel_frobenius(posterior_mse(mp, h, q),
                                                    posterior_mse_information(mp, h, q, &fb)));
    fallbacks += fb;

    const double step = 1e-6 * std::max(1.0, p.norm());
    Mat24 fd = Mat24::Zero();
    for (int c = 0; c < 2; ++c) {
      Vec2 d = Vec2::Zero();
      d(c) = step;
      const Vec2 diff = (measurement_map(p + d, 50.0) - measurement_map(p - d, 50.0)) / (2 * step);
      fd.col(2 * c) = diff;
    }
    worst_jac = std::max(worst_jac, (h - fd).norm() / h.norm());
  }
  rep.add("covariance and information forms agree", worst_form <= 1e-8 && fallbacks == 0,
          std::to_string(instances) + " instances, worst relative difference " + num(worst_form) +
              " (limit 1e-08)");
  rep.add("Jacobian matches finite differences", worst_jac <= 1e-6,
          std::to_string(instances) + " instances, worst relative difference " + num(worst_jac) +
              " (limit 1e-06)");
  return rep;
}

Report simd_check(std::uint64_t seed) {
  Report rep{"simd"};
  const simd::Kernels* avx = simd::avx2_kernels();
  const simd::Kernels& ref = simd::scalar_kernels();
  rep.summary["active"] = simd::kernels().name;
  if (avx == nullptr) {
    rep.add("vector kernels", true, "AVX2/FMA unavailable, scalar path only", false);
    return rep;
  }
  CounterRng rng(CounterRng::mix(seed + 2));
  const std::size_t n = 4099;
  std::vector<double> a(n), b(n), c(n), x(n), y(n);

  for (std::size_t i = 0; i < n; ++i) x[i] = 12.0 * rng.normal();
  ref.erfc_batch(x.data(), a.data(), n);
  avx->erfc_batch(x.data(), b.data(), n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / (1e-2 + a[i]));
  rep.add("erfc batch", worst <= 1e-13, "worst scaled difference " + num(worst));

  const int n_tx = 64;
  for (std::size_t i = 0; i < n; ++i) x[i] = 0.2 * rng.normal();
  ref.gain_batch(x.data(), a.data(), n, n_tx);
  avx->gain_batch(x.data(), b.data(), n, n_tx);
  worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  rep.add("beam gain batch", worst <= 1e-9 * n_tx, "worst difference " + num(worst));

  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 0.5 + 0.6 * rng.normal();
    y[i] = 7.0 + 0.6 * rng.normal();
  }
  const simd::OutageEvent ev{0.5 / std::hypot(0.5, 7.0), 6332.6, 2500.0, 30.0, 16};
  const auto ca = ref.outage_count(x.data(), y.data(), n, ev);
  const auto cb = avx->outage_count(x.data(), y.data(), n, ev);
  rep.add("outage count", ca == cb, std::to_string(ca) + " vs " + std::to_string(cb));

  simd::AcorIntegrand p;
  p.beam_x = 1.5;
  p.beam_y = 7.3;
  p.y0 = 0.2;
  p.y1 = 55.0;
  p.y2 = -0.8;
  p.sd_x = 0.2;
  p.slope = 0.1;
  p.cond_sd = 0.15;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -1.6 + 3.2 * static_cast<double>(i) / (n - 1);
    c[i] = 3.2 / n;
  }
  const double sa = ref.acor_sum(x.data(), c.data(), n, p);
  const double sb = avx->acor_sum(x.data(), c.data(), n, p);
  rep.add("aCOR sum", std::abs(sa - sb) <= 1e-12, num(sa) + " vs " + num(sb));
  return rep;
}

Report fixture_check(const fs::path& dir) {
  Report rep{"fixtures"};
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    rep.add("fixtures present", false, "no *.json fixtures in " + dir.string());
    return rep;
  }
  for (const fs::path& f : files) {
    const std::string name = "fixture " + f.filename().string();
    try {
      std::ifstream in(f);
      const json doc = json::parse(in);
      const std::string kind = doc.at("kind").get<std::string>();
      const double tol = doc.at("tolerance").get<double>();
      double worst = 0.0;
      for (const json& row : doc.at("rows")) {
        ScenarioConfig s;
        if (kind == "approx_op") {
          s.n_tx = row.at("n_tx").get<int>();
          const Vec2 beam{row.at("beam")[0].get<double>(), row.at("beam")[1].get<double>()};
          Mat2 cov;
          cov << row.at("cov")[0].get<double>(), row.at("cov")[1].get<double>(),
              row.at("cov")[1].get<double>(), row.at("cov")[2].get<double>();
          const double got = approx_op(beam, row.at("gamma").get<double>(), {beam, cov}, s);
          worst = std::max(worst, std::abs(got - row.at("op").get<double>()));
        } else if (kind == "ekf_posterior") {
          Mat4 mp;
          Mat4 want;
          Mat2 q;
          for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
              mp(i, j) = row.at("prior_mse")[i][j].get<double>();
              want(i, j) = row.at("posterior_mse")[i][j].get<double>();
            }
          }
          for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) q(i, j) = row.at("meas_cov")[i][j].get<double>();
          }
          const double x = row.at("position")[0].get<double>();
          const double y = row.at("position")[1].get<double>();
          const Mat24 h = jacobian({x, 0.0, y, 0.0}, row.at("altitude_m").get<double>());
          worst = std::max(worst, rel_frobenius(want, posterior_mse(mp, h, q)));
        } else if (kind == "model_constants") {
          s.n_tx = s.n_rx = row.at("n_tx").get<int>();
          s.y_min_m = row.at("y_min_m").get<double>();
          auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
          worst = std::max({worst, rel(sensing_gain(s), row.at("sensing_gain").get<double>()),
                            rel(s.channel_snr(), row.at("channel_snr").get<double>()),
                            rel(gamma_max(s), row.at("gamma_max").get<double>())});
        } else {
          throw std::runtime_error("unknown fixture kind '" + kind + "'");
        }
      }
      rep.add(name, worst <= tol, kind + ": worst deviation " + num(worst) + " (limit " + num(tol) + ")");
    } catch (const std::exception& ex) {
      rep.add(name, false, std::string("unreadable: ") + ex.what());
    }
  }
  return rep;
}

Report selftest(const fs::path& fixtures, const fs::path& out) {
  Report rep{"selftest"};
  auto absorb = [&](const Report& r) {
    for (const Check& c : r.checks) rep.checks.push_back(c);
  };
  absorb(fixture_check(fixtures));
  absorb(proposition2_check(1000, 50, 2024));
  absorb(ekf_identity_check(1000, 2024));
  absorb(simd_check(2024));

  Config c;
  c.scenario.initial_state = {20.0, 0.0, 20.0, 0.0};
  c.scenario.initial_estimate = {20.083, -0.001, 20.037, 0.042};
  c.scenario.num_slots = 20;
  auto render = [&] {
    const RunResult r = run(c, Policy::kProposedAo, 7);
    std::string text;
    for (const SlotRecord& s : r.slots) text += slot_csv_row(s) + "\n";
    return text + run_metadata(c, r).dump();
  };
  const std::string first = render();
  rep.add("closed loop deterministic", first == render(), "two 20-slot runs with seed 7");
  save_report(out, rep);
  return rep;
}

bool same_files(const fs::path& a, const fs::path& b, std::string* first_difference) {
  auto list = [](const fs::path& root) {
    std::set<fs::path> out;
    if (fs::is_directory(root)) {
      for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.insert(fs::relative(e.path(), root));
      }
    }
    return out;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  std::set<fs::path> names = list(a);
  const std::set<fs::path> other = list(b);
  names.insert(other.begin(), other.end());
  for (const fs::path& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) {
      if (first_difference) *first_difference = n.string();
      return false;
    }
  }
  return true;
}

}  // namespace isac
