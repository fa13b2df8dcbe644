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

// Beam gain, the elliptical approximation of the complementary outage region
// and the outage probabilities built on it.

#include <cstdint>

#include "isac/config.hpp"
#include "isac/rng.hpp"
#include "isac/types.hpp"

namespace isac {

enum class Stage { kPrediction, kEstimation };

/// Quadratic form xi(d) = 0.5 d^T hessian d + gradient^T d + constant in the
/// deviation d = q - q_beam. Non-negative values mean outage.
struct AcorQuadratic {
  Mat2 hessian = Mat2::Zero();
  Vec2 gradient = Vec2::Zero();
  double constant = 0.0;
  Stage stage = Stage::kPrediction;

  double operator()(const Vec2& deviation) const {
    return 0.5 * deviation.dot(hessian * deviation) + gradient.dot(deviation) + constant;
  }
};

/// Chord representation of the aCOR ellipse. Limits are in deviation
/// coordinates.
struct AcorBounds {
  double y0 = 0.0;
  double y1 = 0.0;
  double y2 = 0.0;
  double x_lower = 0.0;
  double x_upper = 0.0;
  bool empty = true;
  Vec2 beam = Vec2::Zero();

  double half_width() const;
  double y_lower(double x_dev) const;
  double y_upper(double x_dev) const;
};

/// Gaussian law of the true horizontal position.
struct PositionGaussian {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Zero();
};

struct SnrTargets {
  double gamma_pred = 0.0;
  double gamma_est = 0.0;
};

/// |sin(N pi k / 2) / sin(pi k / 2)|, N at k = 0.
double beam_gain_from_kappa(double kappa, int n_tx);
/// Beam gain for azimuths measured from the array axis.
double beam_gain(double theta_true, double theta_beam, int n_tx);

/// cos(theta_beam) - cos(theta_true). Throws SingularityError on a zero-norm
/// position.
double kappa(const Vec2& true_pos, const Vec2& beam_pos);

/// Curvature of the beam gain at its peak: gain ~ N - M k^2.
double taylor_m(int n_tx);

/// Received SNR at the true position for a beam steered at beam_pos.
double received_snr(const Vec2& true_pos, const Vec2& beam_pos, const ScenarioConfig& cfg);

AcorQuadratic acor_quadratic(const Vec2& beam_pos, double gamma, const ScenarioConfig& cfg,
                             Stage stage = Stage::kPrediction);
AcorBounds acor_bounds(const Vec2& beam_pos, double gamma, const ScenarioConfig& cfg);

/// Approximated outage probability for a beam at beam_pos, target SNR gamma
/// and true position ~ pos. Evaluated by Gauss-Legendre quadrature of the
/// conditional miss probability over the ellipse's x-range.
double approx_op(const Vec2& beam_pos, double gamma, const PositionGaussian& pos,
                 const ScenarioConfig& cfg);

/// Monte Carlo estimate of the exact outage event (Dirichlet kernel, exact
/// distance). Trial i always uses normal pair i of `rng`, so the result does
/// not depend on how the trials are split across workers.
double mc_op(const Vec2& beam_pos, double gamma, const PositionGaussian& pos,
             const ScenarioConfig& cfg, std::uint64_t n_trials, const CounterRng& rng);

double outage_capacity(const SnrTargets& targets, double w);

/// Inputs the planner holds before the slot starts.
struct PlanningContext {
  MotionState prev_estimate{};
  Mat4 prior_mse = Mat4::Zero();  // M_p, independent of the decision
  const ScenarioConfig* cfg = nullptr;

  PlanningContext() = default;
  PlanningContext(const MotionState& estimate, const Mat4& prev_mse, const ScenarioConfig& config);

  Mat2 prediction_cov() const;
  /// Position marginal of the posterior MSE expected at beam_pos with ratio w.
  Mat2 estimation_cov(const Vec2& beam_pos, double w) const;
};

struct StageOps {
  double prediction = 0.0;
  double estimation = 0.0;
};

StageOps stage_ops(const Vec2& beam_pos, double w, const SnrTargets& targets,
                   const PlanningContext& ctx);

/// max(prediction OP, estimation OP) - outage threshold; negative is feasible.
double max_op_constraint(const Vec2& beam_pos, double w, const SnrTargets& targets,
                         const PlanningContext& ctx);

}  // namespace isac
