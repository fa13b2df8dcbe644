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

// Acceptance runner: one PASS/FAIL line per criterion, INFO lines for
// reported-only results. Usage: acceptance [output-dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "isac/config.hpp"
#include "isac/experiments.hpp"
#include "isac/sim.hpp"

namespace fs = std::filesystem;
using isac::Config;
using isac::Report;

namespace {

#ifndef ISAC_PRESET_DIR
#define ISAC_PRESET_DIR "presets"
#endif

Config preset(const std::string& name) {
  return isac::load_config(fs::path(ISAC_PRESET_DIR) / (name + ".json"));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f s", s);
  return buf;
}

class Ledger {
 public:
  void line(const std::string& name, bool ok, const std::string& detail, bool gated = true) {
    std::cout << (!gated ? "INFO  " : ok ? "PASS  " : "FAIL  ") << name << "  " << detail
              << std::endl;
    if (gated) {
      ++total_;
      failed_ += !ok;
    }
  }
  int failed() const { return failed_; }
  int total() const { return total_; }

 private:
  int total_ = 0;
  int failed_ = 0;
};

// Gated checks of `r` whose names start with one of `prefixes`.
std::pair<bool, std::string> gather(const Report& r, const std::vector<std::string>& prefixes) {
  bool ok = true;
  std::string detail;
  for (const isac::Check& c : r.checks) {
    bool hit = false;
    for (const auto& p : prefixes) hit = hit || c.name.rfind(p, 0) == 0;
    if (!hit || !c.gated) continue;
    ok = ok && c.passed;
    detail += (detail.empty() ? "" : "; ") + c.name + ": " + c.detail;
  }
  return {ok, detail};
}

bool same_scenario(const Config& a, const Config& b) {
  auto strip = [](const Config& c) {
    auto j = isac::config_to_json(c);
    j.erase("experiment");
    j.erase("name");
    return j;
  };
  return strip(a) == strip(b);
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::create_directories(out);
  Ledger ledger;

  {
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = isac::validate_op(preset("fig3"), out / "fig3");
    const double t = seconds_since(t0);
    auto [ok, detail] = gather(r, {"op "});
    ledger.line("OP-approximation accuracy", ok && t <= 120.0, detail + "; runtime " + secs(t));
    for (const isac::Check& c : r.checks) {
      if (!c.gated) ledger.line("  " + c.name, c.passed, c.detail, false);
    }
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = isac::op_map(preset("fig4"), out / "fig4");
    const double t = seconds_since(t0);
    auto [ok, detail] = gather(r, {"argmin n_tx"});
    ledger.line("OP-map optimum", ok && t <= 300.0, detail + "; runtime " + secs(t));
    for (const isac::Check& c : r.checks) {
      if (c.name.rfind("argmin n_tx", 0) != 0) ledger.line("  " + c.name, c.passed, c.detail, false);
    }
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = isac::proposition2_check(1000, 50, 2024);
    const double t = seconds_since(t0);
    auto [ok, detail] = gather(r, {""});
    ledger.line("OP monotone in the target SNR", ok && t <= 60.0, detail + "; runtime " + secs(t));
  }
  {
    const Report r = isac::ekf_identity_check(1000, 2024);
    auto [ok, detail] = gather(r, {""});
    ledger.line("EKF algebraic identities", ok, detail);
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = isac::convergence(preset("fig5a"), out / "fig5a");
    const double t = seconds_since(t0);
    auto [ok, detail] = gather(r, {""});
    ledger.line("Solver agreement", ok && t <= 180.0, detail + "; runtime " + secs(t));
  }
  {
    const Report r = isac::sweep_w(preset("fig5b"), out / "fig5b");
    auto [ok, detail] = gather(r, {""});
    ledger.line("Sensing/communication trade-off", ok, detail);
  }

  // The Fig. 6 run of each policy is run 0 of the Fig. 7 Monte Carlo batch
  // whenever the two presets describe the same scenario.
  const Config fig6 = preset("fig6-pmd");
  const Config fig7 = preset("fig7-pmd");
  std::map<isac::Policy, isac::MonteCarloAggregate> pmd;
  std::map<isac::Policy, double> per_run;
  for (const auto& name : fig7.experiment.policies) {
    const isac::Policy p = isac::parse_policy(name);
    const auto t0 = std::chrono::steady_clock::now();
    pmd.emplace(p, isac::monte_carlo_runs(fig7, p, fig7.experiment.mc_runs));
    per_run[p] = seconds_since(t0) / fig7.experiment.mc_runs;
  }
  {
    std::map<isac::Policy, isac::RunResult> runs;
    if (same_scenario(fig6, fig7)) {
      for (const auto& [p, agg] : pmd) runs.emplace(p, agg.runs.front());
    } else {
      for (const auto& name : fig6.experiment.policies) {
        const isac::Policy p = isac::parse_policy(name);
        const auto t0 = std::chrono::steady_clock::now();
        runs.emplace(p, isac::run(fig6, p));
        per_run[p] = seconds_since(t0);
      }
    }
    const Report r = isac::track_report(fig6, runs);
    auto [ok, detail] = gather(r, {""});
    double slowest = 0.0;
    for (const auto& [p, t] : per_run) slowest = std::max(slowest, t);
    ledger.line("Trajectory geometry", ok && slowest <= 600.0,
                detail + "; slowest policy run " + secs(slowest));
  }
  const Report pmd_report = isac::compare_outputs(fig7, pmd, out / "fig7-pmd");
  {
    auto [ok, detail] = gather(pmd_report, {"proposed"});
    ledger.line("Capacity superiority (PMD)", ok, detail);
  }
  {
    auto [ok, detail] = gather(pmd_report, {"outage "});
    ledger.line("Outage compliance", ok, detail);
  }
  {
    const Report r = isac::compare(preset("fig7-pmnd"), out / "fig7-pmnd");
    for (const isac::Check& c : r.checks) ledger.line("  PMnD " + c.name, c.passed, c.detail, false);
  }
  {
    const fs::path a = out / "determinism" / "a";
    const fs::path b = out / "determinism" / "b";
    Config short_track = fig6;
    short_track.scenario.num_slots = 100;
    Config short_compare = fig7;
    short_compare.scenario.num_slots = 50;
    short_compare.experiment.mc_runs = 2;
    const std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> commands = {
        {"validate-op", [](const fs::path& d) { isac::validate_op(preset("fig3"), d); }},
        {"convergence", [](const fs::path& d) { isac::convergence(preset("fig5a"), d); }},
        {"sweep-w", [](const fs::path& d) { isac::sweep_w(preset("fig5b"), d); }},
        {"track", [&](const fs::path& d) { isac::track(short_track, d); }},
        {"compare", [&](const fs::path& d) { isac::compare(short_compare, d); }},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, cmd] : commands) {
      fs::remove_all(a / name);
      fs::remove_all(b / name);
      cmd(a / name);
      cmd(b / name);
      std::string diff;
      const bool same = isac::same_files(a / name, b / name, &diff);
      ok = ok && same;
      detail += (detail.empty() ? "" : "; ") + name + (same ? " identical" : " differs in " + diff);
    }
    ledger.line("Determinism", ok, detail);
  }

  std::cout << "acceptance: " << ledger.total() - ledger.failed() << "/" << ledger.total()
            << " criteria passed" << std::endl;
  return ledger.failed() == 0 ? 0 : 1;
}
