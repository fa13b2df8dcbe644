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

#include "isac/outage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "isac/ekf.hpp"
#include "isac/model.hpp"
#include "isac/parallel.hpp"
#include "isac/quadrature.hpp"
#include "isac/simd/kernels.hpp"

namespace isac {

namespace {

constexpr double kDegenerateDet = 1e-24;
constexpr std::uint64_t kMcChunk = 8192;
// Panel refinement for the aCOR integral: probe count per panel, largest
// allowed move of a standardized bound between probes, and limits on the
// partition.
constexpr int kProbes = 8;
constexpr double kMaxJump = 1.5;
constexpr double kSaturated = 8.0;
constexpr std::size_t kMaxPanels = 256;
constexpr double kMinPanelFraction = 65536.0;

double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace

double AcorBounds::half_width() const { return 0.5 * (x_upper - x_lower); }

double AcorBounds::y_upper(double x_dev) const {
  const double ax = x_dev + beam(0);
  return -beam(1) + y0 * ax + std::sqrt(std::max(0.0, y1 + y2 * ax * ax));
}

double AcorBounds::y_lower(double x_dev) const {
  const double ax = x_dev + beam(0);
  return -beam(1) + y0 * ax - std::sqrt(std::max(0.0, y1 + y2 * ax * ax));
}

double beam_gain_from_kappa(double k, int n_tx) {
  const double half = 0.5 * std::numbers::pi * k;
  const double s = std::sin(half);
  if (std::abs(s) < 1e-12) return static_cast<double>(n_tx);
  return std::abs(std::sin(n_tx * half) / s);
}

double beam_gain(double theta_true, double theta_beam, int n_tx) {
  return beam_gain_from_kappa(std::cos(theta_beam) - std::cos(theta_true), n_tx);
}

double kappa(const Vec2& true_pos, const Vec2& beam_pos) {
  const double nt = true_pos.norm();
  const double nb = beam_pos.norm();
  if (nt == 0.0 || nb == 0.0) throw SingularityError("azimuth is undefined at the origin");
  return beam_pos(0) / nb - true_pos(0) / nt;
}

double taylor_m(int n_tx) {
  const double n = n_tx;
  return n * std::numbers::pi * std::numbers::pi * (n * n - 1.0) / 24.0;
}

double received_snr(const Vec2& true_pos, const Vec2& beam_pos, const ScenarioConfig& cfg) {
  const double h2 = cfg.altitude_m * cfg.altitude_m;
  const double g = beam_gain_from_kappa(kappa(true_pos, beam_pos), cfg.n_tx);
  return cfg.channel_snr() * g / (true_pos.squaredNorm() + h2);
}

AcorQuadratic acor_quadratic(const Vec2& beam_pos, double gamma, const ScenarioConfig& cfg,
                             Stage stage) {
  const double x = beam_pos(0);
  const double y = beam_pos(1);
  const double r2 = x * x + y * y;
  const double r6 = r2 * r2 * r2;
  const double m = taylor_m(cfg.n_tx);
  const double c = gamma / (m * cfg.channel_snr());
  const double xi20 = y * y * y * y / r6 + c;
  const double xi11 = -2.0 * x * y * y * y / r6;
  const double xi02 = x * x * y * y / r6 + c;
  AcorQuadratic q;
  q.hessian << 2.0 * xi20, xi11, xi11, 2.0 * xi02;
  q.gradient << 2.0 * c * x, 2.0 * c * y;
  q.constant = c * (r2 + cfg.altitude_m * cfg.altitude_m) - cfg.n_tx / m;
  q.stage = stage;
  return q;
}

AcorBounds acor_bounds(const Vec2& beam_pos, double gamma, const ScenarioConfig& cfg) {
  if (!(gamma > 0.0)) throw std::invalid_argument("aCOR bounds need a positive target SNR");
  const double x = beam_pos(0);
  const double y = beam_pos(1);
  const double r2 = x * x + y * y;
  const double r6 = r2 * r2 * r2;
  const double pm = cfg.channel_snr() * taylor_m(cfg.n_tx);
  const double h2 = cfg.altitude_m * cfg.altitude_m;
  const double den = r6 * gamma + x * x * y * y * pm;
  AcorBounds b;
  b.beam = beam_pos;
  b.y0 = x * y * y * y * pm / den;
  b.y1 = (cfg.channel_snr() * cfg.n_tx - h2 * gamma) * r6 / den;
  b.y2 = -(r2 * r2 * r2 * r2) * (r2 * r2 * gamma * gamma + pm * y * y * gamma) / (den * den);
  b.empty = !(b.y1 > 0.0) || !(b.y2 < 0.0);
  if (!b.empty) {
    const double half = std::sqrt(-b.y1 / b.y2);
    b.x_lower = -x - half;
    b.x_upper = -x + half;
  }
  return b;
}

double approx_op(const Vec2& beam_pos, double gamma, const PositionGaussian& pos,
                 const ScenarioConfig& cfg) {
  if (!(gamma > 0.0)) return 0.0;
  const AcorBounds b = acor_bounds(beam_pos, gamma, cfg);
  if (b.empty) return 1.0;

  const Vec2 mean = pos.mean - beam_pos;
  const Mat2& cov = pos.cov;
  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (det <= kDegenerateDet || !(cov(0, 0) > 0.0)) {
    return acor_quadratic(beam_pos, gamma, cfg)(mean) < 0.0 ? 0.0 : 1.0;
  }

  const double sx = std::sqrt(cov(0, 0));
  const double outside =
      upper_tail((mean(0) - b.x_lower) / sx) + upper_tail((b.x_upper - mean(0)) / sx);
  const double span = cfg.quadrature_sigma_span * sx;
  const double lo = std::max(b.x_lower, mean(0) - span);
  const double hi = std::min(b.x_upper, mean(0) + span);
  if (!(lo < hi)) return std::clamp(outside, 0.0, 1.0);

  // x = centre + half * sin(t) turns the square-root endpoint behaviour of
  // the chord into a smooth integrand in t.
  const double centre = 0.5 * (b.x_lower + b.x_upper);
  const double half = b.half_width();
  const double t_lo = std::asin(std::clamp((lo - centre) / half, -1.0, 1.0));
  const double t_hi = std::asin(std::clamp((hi - centre) / half, -1.0, 1.0));

  // The conditional miss probability switches where a chord bound crosses
  // the conditional mean, over a width of one conditional sd. Split the
  // t-window until the standardized bounds (clamped where erfc has
  // saturated) move by at most kMaxJump between probe points of a panel.
  const double cond_sd = std::sqrt(det / cov(0, 0));
  const double slope = cov(0, 1) / cov(0, 0);
  const auto standardized = [&](double t) {
    const double xd = centre + half * std::sin(t);
    const double cm = mean(1) + slope * (xd - mean(0));
    return std::pair{std::clamp((b.y_upper(xd) - cm) / cond_sd, -kSaturated, kSaturated),
                     std::clamp((b.y_lower(xd) - cm) / cond_sd, -kSaturated, kSaturated)};
  };
  const double min_width = (t_hi - t_lo) / kMinPanelFraction;
  thread_local std::vector<std::pair<double, double>> stack;
  thread_local std::vector<std::pair<double, double>> leaves;
  stack.assign(1, {t_lo, t_hi});
  leaves.clear();
  while (!stack.empty()) {
    const auto [a, c] = stack.back();
    stack.pop_back();
    bool smooth = true;
    if (c - a > min_width && leaves.size() + stack.size() < kMaxPanels) {
      auto prev = standardized(a);
      for (int k = 1; k <= kProbes && smooth; ++k) {
        const auto cur = standardized(a + (c - a) * k / kProbes);
        smooth = std::abs(cur.first - prev.first) <= kMaxJump &&
                 std::abs(cur.second - prev.second) <= kMaxJump;
        prev = cur;
      }
    }
    if (smooth) {
      leaves.push_back({a, c});
    } else {
      const double m = 0.5 * (a + c);
      stack.push_back({m, c});
      stack.push_back({a, m});
    }
  }

  const auto rule = gauss_legendre(cfg.quadrature_nodes);
  const std::size_t per_panel = rule->nodes.size();
  const std::size_t n = per_panel * leaves.size();
  thread_local std::vector<double> xs;
  thread_local std::vector<double> ws;
  xs.resize(n);
  ws.resize(n);
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const double mid = 0.5 * (leaves[k].first + leaves[k].second);
    const double rad = 0.5 * (leaves[k].second - leaves[k].first);
    for (std::size_t i = 0; i < per_panel; ++i) {
      const double t = mid + rad * rule->nodes[i];
      xs[k * per_panel + i] = centre + half * std::sin(t);
      ws[k * per_panel + i] = rule->weights[i] * rad * half * std::cos(t);
    }
  }

  simd::AcorIntegrand p;
  p.beam_x = beam_pos(0);
  p.beam_y = beam_pos(1);
  p.y0 = b.y0;
  p.y1 = b.y1;
  p.y2 = b.y2;
  p.mean_x = mean(0);
  p.mean_y = mean(1);
  p.sd_x = sx;
  p.slope = slope;
  p.cond_sd = cond_sd;
  const double inside = simd::kernels().acor_sum(xs.data(), ws.data(), n, p);
  return std::clamp(outside + inside, 0.0, 1.0);
}

double mc_op(const Vec2& beam_pos, double gamma, const PositionGaussian& pos,
             const ScenarioConfig& cfg, std::uint64_t n_trials, const CounterRng& rng) {
  if (n_trials == 0) throw std::invalid_argument("mc_op needs at least one trial");
  const Mat2& cov = pos.cov;
  const double l11 = std::sqrt(std::max(cov(0, 0), 0.0));
  const double l21 = l11 > 0.0 ? cov(1, 0) / l11 : 0.0;
  const double l22 = std::sqrt(std::max(cov(1, 1) - l21 * l21, 0.0));

  simd::OutageEvent ev;
  ev.beam_cos = beam_pos(0) / beam_pos.norm();
  ev.snr_scale = cfg.channel_snr();
  ev.altitude_sq = cfg.altitude_m * cfg.altitude_m;
  ev.gamma = gamma;
  ev.n_tx = cfg.n_tx;

  const std::uint64_t chunks = (n_trials + kMcChunk - 1) / kMcChunk;
  std::vector<std::uint64_t> counts(chunks, 0);
  parallel_for(chunks, [&](std::size_t c) {
    const std::uint64_t begin = c * kMcChunk;
    const std::uint64_t end = std::min(n_trials, begin + kMcChunk);
    std::vector<double> xs(end - begin);
    std::vector<double> ys(end - begin);
    for (std::uint64_t i = begin; i < end; ++i) {
      const auto [z1, z2] = rng.normal_pair_at(i);
      xs[i - begin] = pos.mean(0) + l11 * z1;
      ys[i - begin] = pos.mean(1) + l21 * z1 + l22 * z2;
    }
    counts[c] = simd::kernels().outage_count(xs.data(), ys.data(), xs.size(), ev);
  });
  std::uint64_t total = 0;
  for (auto k : counts) total += k;
  return static_cast<double>(total) / static_cast<double>(n_trials);
}

double outage_capacity(const SnrTargets& targets, double w) {
  return w * std::log2(1.0 + targets.gamma_pred) + (1.0 - w) * std::log2(1.0 + targets.gamma_est);
}

PlanningContext::PlanningContext(const MotionState& estimate, const Mat4& prev_mse,
                                 const ScenarioConfig& config)
    : prev_estimate(estimate), prior_mse(predict_mse(prev_mse, config)), cfg(&config) {}

Mat2 PlanningContext::prediction_cov() const { return position_marginal(prior_mse); }

Mat2 PlanningContext::estimation_cov(const Vec2& beam_pos, double w) const {
  const MotionState planned = planned_state(beam_pos, prev_estimate, cfg->slot_s);
  return position_marginal(planned_posterior_mse(prior_mse, planned, w, *cfg));
}

StageOps stage_ops(const Vec2& beam_pos, double w, const SnrTargets& targets,
                   const PlanningContext& ctx) {
  StageOps ops;
  ops.prediction = approx_op(beam_pos, targets.gamma_pred, {beam_pos, ctx.prediction_cov()}, *ctx.cfg);
  ops.estimation =
      approx_op(beam_pos, targets.gamma_est, {beam_pos, ctx.estimation_cov(beam_pos, w)}, *ctx.cfg);
  return ops;
}

double max_op_constraint(const Vec2& beam_pos, double w, const SnrTargets& targets,
                         const PlanningContext& ctx) {
  const StageOps ops = stage_ops(beam_pos, w, targets, ctx);
  return std::max(ops.prediction, ops.estimation) - ctx.cfg->outage_threshold;
}

}  // namespace isac
