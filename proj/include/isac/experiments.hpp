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

// Figure-reproduction workflows shared by the CLI and the acceptance runner.
// Each workflow computes its series, optionally writes CSV/JSON files into an
// output directory, and returns a table of checks.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "isac/config.hpp"
#include "isac/sim.hpp"

#include "json.hpp"

namespace isac {

struct Check {
  std::string name;
  bool gated = true;
  bool passed = false;
  std::string detail;
};

struct Report {
  explicit Report(std::string name = {}) : experiment(std::move(name)) {}

  std::string experiment;
  std::vector<Check> checks;
  nlohmann::json summary = nlohmann::json::object();

  /// True when every gated check passed.
  bool passed() const;
  const Check* find(const std::string& name) const;
  void add(std::string name, bool passed, std::string detail, bool gated = true);
  nlohmann::json to_json() const;
  /// One line per check: PASS, FAIL or INFO.
  std::string table() const;
};

/// An empty `out` path skips all file output.
Report validate_op(const Config& cfg, const std::filesystem::path& out);
Report op_map(const Config& cfg, const std::filesystem::path& out);
Report convergence(const Config& cfg, const std::filesystem::path& out);
Report sweep_w(const Config& cfg, const std::filesystem::path& out);
Report track(const Config& cfg, const std::filesystem::path& out);
Report compare(const Config& cfg, const std::filesystem::path& out);

/// Geometry checks on one run per policy.
Report track_report(const Config& cfg, const std::map<Policy, RunResult>& runs);
/// Capacity and outage checks on Monte Carlo aggregates per policy.
Report compare_report(const Config& cfg, const std::map<Policy, MonteCarloAggregate>& runs);
/// compare_report plus the capacity CSVs and per-policy run-0 files.
Report compare_outputs(const Config& cfg, const std::map<Policy, MonteCarloAggregate>& runs,
                       const std::filesystem::path& out);

/// OP monotonicity in the target SNR over random feasible draws.
Report proposition2_check(int draws, int gamma_points, std::uint64_t seed);
/// Covariance/information form agreement and Jacobian finite differences.
Report ekf_identity_check(int instances, std::uint64_t seed);
/// Vector kernels against the scalar reference on random batches.
Report simd_check(std::uint64_t seed);
/// Frozen reference values in every *.json file of `dir`.
Report fixture_check(const std::filesystem::path& dir);
/// The fast invariant suite.
Report selftest(const std::filesystem::path& fixtures, const std::filesystem::path& out);

/// Byte comparison of every regular file present in either directory.
bool same_files(const std::filesystem::path& a, const std::filesystem::path& b,
                std::string* first_difference = nullptr);

}  // namespace isac
