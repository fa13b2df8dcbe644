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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>

namespace isac {

/// Independent random streams used by the simulator.
enum class Stream : std::uint64_t {
  kProcess = 1,
  kMeasurement = 2,
  kInit = 3,
  kMonteCarlo = 4,
};

/// Counter-based generator: the i-th output is a pure function of (key, i),
/// so any draw can be reproduced or partitioned across workers without
/// replaying the sequence. The mixing function is the SplitMix64 finaliser.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  /// Derives the stream key as seed XOR stream id, then whitens it.
  static CounterRng for_stream(std::uint64_t seed, Stream stream) {
    return CounterRng(mix(seed ^ static_cast<std::uint64_t>(stream)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  result_type at(std::uint64_t index) const { return mix(key_ + (index + 1) * kGolden); }

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform_at(std::uint64_t index) const {
    return static_cast<double>((at(index) >> 11) + 1) * 0x1.0p-53;
  }

  /// Box-Muller pair built from uniforms at (2 * pair, 2 * pair + 1).
  std::pair<double, double> normal_pair_at(std::uint64_t pair) const {
    const double u1 = uniform_at(2 * pair);
    const double u2 = uniform_at(2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  /// Sequential standard normals; always consumes counters in pairs so the
  /// stream position stays aligned.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    if (counter_ % 2 != 0) ++counter_;
    auto [a, b] = normal_pair_at(counter_ / 2);
    counter_ += 2;
    spare_ = b;
    has_spare_ = true;
    return a;
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace isac
