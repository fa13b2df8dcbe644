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

#include <cstddef>
#include <cstdint>

#include "isac/simd/kernels.hpp"

namespace isac::simd::detail {

double dirichlet_gain(double kappa, int n_tx);

void gain_batch_scalar(const double* kappa, double* gain, std::size_t n, int n_tx);
std::uint64_t outage_count_scalar(const double* x, const double* y, std::size_t n,
                                  const OutageEvent& ev);
void erfc_batch_scalar(const double* x, double* out, std::size_t n);
double acor_sum_scalar(const double* x, const double* wt, std::size_t n, const AcorIntegrand& p);

// Defined in the AVX2 translation unit; nullptr when it was not compiled in.
const Kernels* avx2_table();

}  // namespace isac::simd::detail
