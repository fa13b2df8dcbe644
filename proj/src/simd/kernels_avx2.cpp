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

// Built with -mavx2 -mfma. Nothing here may run before the dispatcher has
// confirmed CPU support.

#include <immintrin.h>

#include <cmath>
#include <numbers>

#include "isac/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace isac::simd::detail {

namespace {

using V = __m256d;

inline V set1(double v) { return _mm256_set1_pd(v); }
inline V fma(V a, V b, V c) { return _mm256_fmadd_pd(a, b, c); }
inline V vabs(V a) { return _mm256_andnot_pd(set1(-0.0), a); }

template <std::size_t N>
inline V horner(V x, const double (&c)[N]) {
  V acc = set1(c[0]);
  for (std::size_t i = 1; i < N; ++i) acc = fma(acc, x, set1(c[i]));
  return acc;
}

// Monic variant: x^N + c[0] x^(N-1) + ... + c[N-1].
template <std::size_t N>
inline V horner_monic(V x, const double (&c)[N]) {
  V acc = _mm256_add_pd(x, set1(c[0]));
  for (std::size_t i = 1; i < N; ++i) acc = fma(acc, x, set1(c[i]));
  return acc;
}

// exp for x <= 709; returns 0 below -708.
V vexp(V x) {
  const V lo_cut = set1(-708.0);
  const V zero_mask = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lo_cut);
  x = _mm256_min_pd(x, set1(709.0));
  const V n = _mm256_round_pd(_mm256_mul_pd(x, set1(std::numbers::log2e)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  V r = fma(n, set1(-6.93145751953125e-1), x);
  r = fma(n, set1(-1.42860682030941723212e-6), r);
  static constexpr double taylor[] = {
      1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
      1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,      1.0 / 720.0,
      1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,         0.5,
      1.0,                1.0};
  const V p = horner(r, taylor);
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const V scaled = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(zero_mask, scaled);
}

// Rational approximations of erf/erfc in the Cephes form.
constexpr double kErfcP[] = {2.46196981473530512524E-10, 5.64189564831068821977E-1,
                             7.46321056442269912687E0,   4.86371970985681366614E1,
                             1.96520832956077098242E2,   5.26445194995477358631E2,
                             9.34528527171957607540E2,   1.02755188689515710272E3,
                             5.57535335369399327526E2};
constexpr double kErfcQ[] = {1.32281951154744992508E1, 8.67072140885989742329E1,
                             3.54937778887819891062E2, 9.75708501743205489753E2,
                             1.82390916687909736289E3, 2.24633760818710981792E3,
                             1.65666309194161350182E3, 5.57535340817727675546E2};
constexpr double kErfcR[] = {5.64189583547755073984E-1, 1.27536670759978104416E0,
                             5.01905042251180477414E0,  6.16021097993053585195E0,
                             7.40974269950448939160E0,  2.97886665372100240670E0};
constexpr double kErfcS[] = {2.26052863220117276590E0, 9.39603524938001434673E0,
                             1.20489539808096656605E1, 1.70814450747565897222E1,
                             9.60896809063285878198E0, 3.36907645100081516050E0};
constexpr double kErfT[] = {9.60497373987051638749E0, 9.00260197203842689217E1,
                            2.23200534594684319226E3, 7.00332514112805075473E3,
                            5.55923013010394962768E4};
constexpr double kErfU[] = {3.35617141647503099647E1, 5.21357949780152679795E2,
                            4.59432382970980127987E3, 2.26290000613890934246E4,
                            4.92673942608635921086E4};

V verfc(V a) {
  const V x = vabs(a);
  const V z = _mm256_mul_pd(a, a);

  const V small = _mm256_sub_pd(
      set1(1.0), _mm256_div_pd(_mm256_mul_pd(a, horner(z, kErfT)), horner_monic(z, kErfU)));

  const V e = vexp(_mm256_sub_pd(_mm256_setzero_pd(), z));
  const V mid = _mm256_div_pd(_mm256_mul_pd(e, horner(x, kErfcP)), horner_monic(x, kErfcQ));
  const V far = _mm256_div_pd(_mm256_mul_pd(e, horner(x, kErfcR)), horner_monic(x, kErfcS));
  V tail = _mm256_blendv_pd(mid, far, _mm256_cmp_pd(x, set1(8.0), _CMP_GE_OQ));
  tail = _mm256_blendv_pd(tail, _mm256_sub_pd(set1(2.0), tail),
                          _mm256_cmp_pd(a, _mm256_setzero_pd(), _CMP_LT_OQ));
  return _mm256_blendv_pd(tail, small, _mm256_cmp_pd(x, set1(1.0), _CMP_LT_OQ));
}

// cos on [-pi, pi]: cos(t) = -sin(|t| - pi/2), odd Taylor series through u^19.
V vcos_bounded(V t) {
  const V u = _mm256_sub_pd(vabs(t), set1(0.5 * std::numbers::pi));
  const V u2 = _mm256_mul_pd(u, u);
  static constexpr double sin_coeff[] = {
      -1.0 / 121645100408832000.0, 1.0 / 355687428096000.0, -1.0 / 1307674368000.0,
      1.0 / 6227020800.0,          -1.0 / 39916800.0,       1.0 / 362880.0,
      -1.0 / 5040.0,               1.0 / 120.0,             -1.0 / 6.0,
      1.0};
  return _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), u), horner(u2, sin_coeff));
}

// |U_{N-1}(cos(pi kappa / 2))| = |sin(N pi kappa / 2) / sin(pi kappa / 2)|.
V vgain(V kappa, int n_tx) {
  const V c = vcos_bounded(_mm256_mul_pd(kappa, set1(0.5 * std::numbers::pi)));
  const V two_c = _mm256_add_pd(c, c);
  V prev = set1(1.0);
  V cur = two_c;
  if (n_tx == 1) return prev;
  for (int k = 2; k < n_tx; ++k) {
    const V next = _mm256_fmsub_pd(two_c, cur, prev);
    prev = cur;
    cur = next;
  }
  return vabs(cur);
}

void gain_batch_avx2(const double* kappa, double* gain, std::size_t n, int n_tx) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(gain + i, vgain(_mm256_loadu_pd(kappa + i), n_tx));
  gain_batch_scalar(kappa + i, gain + i, n - i, n_tx);
}

std::uint64_t outage_count_avx2(const double* x, const double* y, std::size_t n,
                                const OutageEvent& ev) {
  const V beam_cos = set1(ev.beam_cos);
  const V scale = set1(ev.snr_scale);
  const V gamma = set1(ev.gamma);
  const V h2 = set1(ev.altitude_sq);
  std::uint64_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const V vx = _mm256_loadu_pd(x + i);
    const V vy = _mm256_loadu_pd(y + i);
    const V r2 = fma(vx, vx, _mm256_mul_pd(vy, vy));
    const V r = _mm256_sqrt_pd(r2);
    const V nonzero = _mm256_cmp_pd(r, _mm256_setzero_pd(), _CMP_GT_OQ);
    const V c = _mm256_and_pd(nonzero, _mm256_div_pd(vx, r));
    const V g = vgain(_mm256_sub_pd(beam_cos, c), ev.n_tx);
    const V lhs = _mm256_mul_pd(scale, g);
    const V rhs = _mm256_mul_pd(gamma, _mm256_add_pd(r2, h2));
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(lhs, rhs, _CMP_LT_OQ));
    count += static_cast<std::uint64_t>(__builtin_popcount(static_cast<unsigned>(mask)));
  }
  return count + outage_count_scalar(x + i, y + i, n - i, ev);
}

void erfc_batch_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, verfc(_mm256_loadu_pd(x + i)));
  erfc_batch_scalar(x + i, out + i, n - i);
}

double acor_sum_avx2(const double* x, const double* wt, std::size_t n, const AcorIntegrand& p) {
  const V inv_cond = set1(1.0 / (std::numbers::sqrt2 * p.cond_sd));
  const V norm = set1(1.0 / (std::sqrt(2.0 * std::numbers::pi) * p.sd_x));
  const V inv_sd = set1(1.0 / p.sd_x);
  const V beam_x = set1(p.beam_x);
  const V neg_beam_y = set1(-p.beam_y);
  const V y0 = set1(p.y0);
  const V y1 = set1(p.y1);
  const V y2 = set1(p.y2);
  const V mx = set1(p.mean_x);
  const V my = set1(p.mean_y);
  const V slope = set1(p.slope);
  const V half = set1(0.5);
  V acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const V xd = _mm256_loadu_pd(x + i);
    const V ax = _mm256_add_pd(xd, beam_x);
    const V chord = _mm256_sqrt_pd(_mm256_max_pd(fma(y2, _mm256_mul_pd(ax, ax), y1),
                                                 _mm256_setzero_pd()));
    const V centre = fma(y0, ax, neg_beam_y);
    const V dx = _mm256_sub_pd(xd, mx);
    const V cm = fma(slope, dx, my);
    const V cu = _mm256_mul_pd(_mm256_sub_pd(_mm256_add_pd(centre, chord), cm), inv_cond);
    const V cl = _mm256_mul_pd(_mm256_sub_pd(_mm256_sub_pd(centre, chord), cm), inv_cond);
    const V miss = _mm256_mul_pd(
        half, _mm256_add_pd(verfc(cu), verfc(_mm256_sub_pd(_mm256_setzero_pd(), cl))));
    const V z = _mm256_mul_pd(dx, inv_sd);
    const V phi = _mm256_mul_pd(norm, vexp(_mm256_mul_pd(set1(-0.5), _mm256_mul_pd(z, z))));
    acc = fma(_mm256_mul_pd(_mm256_loadu_pd(wt + i), phi), miss, acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  const double head = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  return head + acor_sum_scalar(x + i, wt + i, n - i, p);
}

}  // namespace

const Kernels* avx2_table() {
  static const Kernels k{"avx2", gain_batch_avx2, outage_count_avx2, erfc_batch_avx2,
                         acor_sum_avx2};
  return &k;
}

}  // namespace isac::simd::detail
