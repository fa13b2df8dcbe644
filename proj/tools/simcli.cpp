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

// simcli <subcommand> --config <path|preset> --out <dir> [--set key=value]... [--seed u64]
//
// Exit codes: 0 pass, 1 criterion failure, 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "isac/config.hpp"
#include "isac/experiments.hpp"
#include "isac/sim.hpp"
#include "isac/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

#ifndef ISAC_PRESET_DIR
#define ISAC_PRESET_DIR "presets"
#endif
#ifndef ISAC_FIXTURE_DIR
#define ISAC_FIXTURE_DIR "tests/fixtures"
#endif

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string fixtures = ISAC_FIXTURE_DIR;
};

// A path is used as given; otherwise the name is looked up among the presets
// (ISAC_PRESETS overrides the built-in directory).
fs::path resolve_config(const std::string& name) {
  if (fs::is_regular_file(name)) return name;
  const char* env = std::getenv("ISAC_PRESETS");
  const fs::path dir = env ? fs::path(env) : fs::path(ISAC_PRESET_DIR);
  const fs::path preset = dir / (name + ".json");
  if (fs::is_regular_file(preset)) return preset;
  throw isac::ConfigError("unknown preset or config file '" + name + "'");
}

isac::Config load(const Options& o) {
  const fs::path path = resolve_config(o.config);
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw isac::ConfigError(path.string() + ": " + e.what());
  }
  if (!doc.contains("name")) doc["name"] = path.stem().string();
  for (const auto& kv : o.overrides) isac::apply_override(doc, kv);
  if (o.seed) doc["rng_seed"] = *o.seed;
  return isac::config_from_json(doc);
}

int finish(const isac::Report& r, const fs::path& out) {
  std::cout << r.table();
  std::cout << (r.passed() ? "result: pass" : "result: FAIL") << "  (" << r.experiment;
  if (!out.empty()) std::cout << ", outputs in " << out.string();
  std::cout << ")\n";
  return r.passed() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive-beamforming simulator: OP validation, figure workflows and self-test"};
  app.require_subcommand(1);
  Options opt;

  using Workflow = std::function<isac::Report(const isac::Config&, const fs::path&)>;
  const std::vector<std::pair<std::string, Workflow>> workflows = {
      {"validate-op", isac::validate_op}, {"op-map", isac::op_map},
      {"convergence", isac::convergence}, {"sweep-w", isac::sweep_w},
      {"track", isac::track},             {"compare", isac::compare},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, fn] : workflows) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " workflow");
    sub->add_option("--config", opt.config, "config file or preset name")->required();
    sub->add_option("--out", opt.out, "output directory")->required();
    sub->add_option("--set", opt.overrides, "override, key=value (dots for nesting)");
    sub->add_option("--seed", opt.seed, "random seed (overrides rng_seed)");
    subs[name] = sub;
  }
  CLI::App* self = app.add_subcommand("selftest", "fast invariant suite");
  self->add_option("--fixtures", opt.fixtures, "fixture directory");
  self->add_option("--out", opt.out, "output directory for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    const fs::path out = opt.out;
    if (!out.empty()) fs::create_directories(out);
    if (self->parsed()) {
      std::cout << "kernels: " << isac::simd::kernels().name << "\n";
      return finish(isac::selftest(opt.fixtures, out), out);
    }
    for (const auto& [name, fn] : workflows) {
      if (!subs[name]->parsed()) continue;
      const isac::Config cfg = load(opt);
      isac::write_file_atomic(out / "config.json", isac::config_to_json(cfg).dump(1) + "\n");
      return finish(fn(cfg, out), out);
    }
  } catch (const isac::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
