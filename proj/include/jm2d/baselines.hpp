// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>

#include "jm2d/common.hpp"
#include "jm2d/interaction.hpp"
#include "jm2d/rng.hpp"
#include "jm2d/sampler.hpp"
#include "jm2d/score_model.hpp"

namespace jm2d {

struct BaselineResult {
  Vector x0;
  std::optional<Vector> k0;
  bool feasible = false;
  int iterations = 0;
};

/// x from the unguided reverse chain, then k from postprocess_optimize.
BaselineResult sequential_sample(const ScoreModel& model, const InteractionPotential& potential,
                                 const ModelBasedPrior& prior, const JM2DConfig& cfg,
                                 const Rng& rng);

inline constexpr int kDefaultGibbsRounds = 3;

/// Draw k ~ p(k) V(x, k) by resampling `budget` prior candidates in proportion
/// to V. When every candidate is infeasible the one with the smallest g is kept.
Vector sample_k_given_x(const InteractionPotential& potential, const ModelBasedPrior& prior,
                        const Vector& x, int budget, Rng& rng);

/// Starts from an unguided x, then alternates k | x and x | k for `rounds` rounds.
BaselineResult gibbs_sample(const ScoreModel& model, const InteractionPotential& potential,
                            const ModelBasedPrior& prior, const JM2DConfig& cfg, int rounds,
                            const Rng& rng);

/// The joint loop without a k channel: score_x = sum s(x_j | x_i) Vx(x_j) / sum Vx(x_j).
/// Uses the joint sampler's x stream tags, so matched seeds produce matched candidates.
Vector conditional_generate(const ScoreModel& model, const StatePotential& potential,
                            const JM2DConfig& cfg, const Rng& rng,
                            const ScoreObserver& observer = {});

using Projection = std::function<Vector(const Vector&)>;

/// Unguided reverse chain with the iterate projected after every step, the last one included.
Vector projection_guided_sample(const ScoreModel& model, const Projection& project,
                                const JM2DConfig& cfg, const Rng& rng);

struct DifferentiableCost {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

inline constexpr double kDefaultGuidanceScale = 0.1;

/// Reverse chain where x_i is shifted by -scale (1 - a_i) grad cost(x_i) before
/// each step. Throws EvaluationError on a non-finite gradient.
Vector gradient_guided_sample(const ScoreModel& model, const DifferentiableCost& cost,
                              double scale, const JM2DConfig& cfg, const Rng& rng);

/// Unguided x draw shared by the baselines: x_I from the joint sampler's init
/// stream, then the full reverse chain.
Vector unguided_sample(const ScoreModel& model, const JM2DConfig& cfg, const Rng& rng);

}  // namespace jm2d
