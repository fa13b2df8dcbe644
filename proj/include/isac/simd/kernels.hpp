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

// Batch kernels behind the outage computations. Each kernel has a scalar
// reference and, when the CPU supports it, an AVX2/FMA variant. The table is
// picked once at first use; ISAC_SIMD=scalar|avx2|auto overrides detection.

#include <cstddef>
#include <cstdint>

namespace isac::simd {

/// Parameters of the aCOR integrand in deviation coordinates (true position
/// minus beam position).
struct AcorIntegrand {
  double beam_x = 0.0;
  double beam_y = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  double mean_x = 0.0;    // deviation mean
  double mean_y = 0.0;
  double sd_x = 1.0;      // marginal standard deviation of the x deviation
  double slope = 0.0;     // Cov(x, y) / Var(x)
  double cond_sd = 1.0;   // standard deviation of y given x
};

/// Inputs of the exact outage event used by the Monte Carlo oracle.
struct OutageEvent {
  double beam_cos = 0.0;  // x_beam / |q_beam|
  double snr_scale = 0.0; // P~
  double altitude_sq = 0.0;
  double gamma = 0.0;
  int n_tx = 2;
};

using GainBatchFn = void (*)(const double* kappa, double* gain, std::size_t n, int n_tx);
using OutageCountFn = std::uint64_t (*)(const double* x, const double* y, std::size_t n,
                                        const OutageEvent& ev);
using ErfcBatchFn = void (*)(const double* x, double* out, std::size_t n);
using AcorSumFn = double (*)(const double* x, const double* wt, std::size_t n,
                             const AcorIntegrand& p);

struct Kernels {
  const char* name;
  GainBatchFn gain_batch;
  OutageCountFn outage_count;
  ErfcBatchFn erfc_batch;
  // Sum of wt[i] * phi(x[i]) * P(y outside the aCOR chord | x[i]).
  AcorSumFn acor_sum;
};

const Kernels& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2 and FMA.
const Kernels* avx2_kernels();
/// Active table.
const Kernels& kernels();

}  // namespace isac::simd
