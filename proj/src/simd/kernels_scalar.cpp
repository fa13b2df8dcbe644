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

#include <algorithm>
#include <cmath>
#include <numbers>

#include "isac/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace isac::simd {

namespace detail {

double dirichlet_gain(double kappa, int n_tx) {
  const double half = 0.5 * std::numbers::pi * kappa;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-12) return static_cast<double>(n_tx);
  return std::abs(std::sin(n_tx * half) / s);
}

void gain_batch_scalar(const double* kappa, double* gain, std::size_t n, int n_tx) {
  for (std::size_t i = 0; i < n; ++i) gain[i] = dirichlet_gain(kappa[i], n_tx);
}

std::uint64_t outage_count_scalar(const double* x, const double* y, std::size_t n,
                                  const OutageEvent& ev) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r2 = x[i] * x[i] + y[i] * y[i];
    const double r = std::sqrt(r2);
    const double c = r > 0.0 ? x[i] / r : 0.0;
    const double g = dirichlet_gain(ev.beam_cos - c, ev.n_tx);
    if (ev.snr_scale * g < ev.gamma * (r2 + ev.altitude_sq)) ++count;
  }
  return count;
}

void erfc_batch_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::erfc(x[i]);
}

double acor_sum_scalar(const double* x, const double* wt, std::size_t n, const AcorIntegrand& p) {
  const double inv_cond = 1.0 / (std::numbers::sqrt2 * p.cond_sd);
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * p.sd_x);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xd = x[i];
    const double ax = xd + p.beam_x;
    const double half_chord = std::sqrt(std::max(p.y1 + p.y2 * ax * ax, 0.0));
    const double centre = -p.beam_y + p.y0 * ax;
    const double cm = p.mean_y + p.slope * (xd - p.mean_x);
    const double cu = (centre + half_chord - cm) * inv_cond;
    const double cl = (centre - half_chord - cm) * inv_cond;
    const double miss = 0.5 * (std::erfc(cu) + std::erfc(-cl));
    const double z = (xd - p.mean_x) / p.sd_x;
    sum += wt[i] * norm * std::exp(-0.5 * z * z) * miss;
  }
  return sum;
}

}  // namespace detail

const Kernels& scalar_kernels() {
  static const Kernels k{"scalar", detail::gain_batch_scalar, detail::outage_count_scalar,
                         detail::erfc_batch_scalar, detail::acor_sum_scalar};
  return k;
}

}  // namespace isac::simd
