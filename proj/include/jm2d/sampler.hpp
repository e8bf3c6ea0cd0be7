// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "jm2d/common.hpp"
#include "jm2d/diffusion.hpp"
#include "jm2d/interaction.hpp"
#include "jm2d/rng.hpp"
#include "jm2d/score_model.hpp"

namespace jm2d {

// Stream tags. Samplers that must agree draw-for-draw (the joint sampler and
// conditional generation) use the same tags for the x channel.
namespace stream_tag {
inline constexpr std::uint64_t kInitX = 0x1001;
inline constexpr std::uint64_t kInitK = 0x1002;
inline constexpr std::uint64_t kCleanX = 0x2001;
inline constexpr std::uint64_t kProposalK = 0x2002;
inline constexpr std::uint64_t kNoiseX = 0x3001;
inline constexpr std::uint64_t kPostprocess = 0x4001;
inline constexpr std::uint64_t kGibbs = 0x5001;
}  // namespace stream_tag

struct JointSample {
  Vector x;
  Vector k;
  int level = 0;
};

struct JM2DConfig {
  int n_x = 128;
  int n_k = 128;
  NoiseSchedule x_schedule = make_schedule(ScheduleKind::cosine, 25);
  NoiseSchedule k_schedule = make_schedule(ScheduleKind::linear, 25);
  StochasticityPolicy sigma_policy;
  CleanEstimateConfig clean_cfg;
  int postprocess_budget = kDefaultPostprocessBudget;
  // Evaluate min(N, N_K) index-matched pairs instead of the full product set.
  bool paired = false;

  int steps() const { return x_schedule.steps(); }
  // Throws std::invalid_argument; the two channels must share the step count.
  void validate() const;

  static JM2DConfig with_steps(int steps, ScheduleKind x_kind = ScheduleKind::cosine,
                               ScheduleKind k_kind = ScheduleKind::linear);
};

struct McSamples {
  VectorSet xs;
  VectorSet ks;
};

/// N clean x estimates from (xi, i) and N_K draws from the k proposal
/// N(ki / sqrt(a), (1 / a - 1) I), a = alpha^k_i.
McSamples sample_mc(int i, const Vector& xi, const Vector& ki, const ScoreModel& model,
                    const JM2DConfig& cfg, const Rng& rng);
/// The x half of sample_mc; candidate j draws from rng.split(kCleanX, i, j).
VectorSet sample_clean_x(int i, const Vector& xi, const ScoreModel& model, const JM2DConfig& cfg,
                         const Rng& rng);
/// The k half of sample_mc; candidate l draws from rng.split(kProposalK, i, l).
VectorSet sample_proposal_k(int i, const Vector& ki, const JM2DConfig& cfg, const Rng& rng);

/// Unnormalized pair weights V(x_j, k_l) p(k_l), scaled by one positive
/// constant so the largest entry is 1. Rows index X, columns index K. In
/// paired mode only the diagonal is filled. Returns an all-zero matrix when
/// no pair has positive weight.
Eigen::MatrixXd importance_weights(const McSamples& mc, const InteractionPotential& potential,
                                   const ModelBasedPrior& prior, bool paired);

struct JointScore {
  Vector score_x;
  Vector score_k;
  double weight_sum = 0.0;
  std::optional<double> ess;
  bool all_zero = false;
};

/// Self-normalized Tweedie score over the weighted product set. With an
/// all-zero weight matrix, score_x is the unweighted mean Tweedie score over
/// X and score_k is the noisy score of the prior p(k).
JointScore weighted_joint_score(const JointSample& y, const McSamples& mc,
                                const Eigen::MatrixXd& weights, const ModelBasedPrior& prior,
                                const JM2DConfig& cfg);
JointScore joint_score(const JointSample& y, const McSamples& mc,
                       const InteractionPotential& potential, const ModelBasedPrior& prior,
                       const JM2DConfig& cfg);

/// (sum w)^2 / sum w^2; empty when every weight is zero.
std::optional<double> effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& weights);

struct LevelDiagnostics {
  int level = 0;
  std::optional<double> ess;
  double weight_sum = 0.0;
  bool zero_weight = false;
};

struct SamplerDiagnostics {
  std::vector<LevelDiagnostics> levels;
  int zero_weight_levels = 0;
  double final_potential = 0.0;
  bool postprocess_invoked = false;
  // g(k0 | x0) <= 0 at the returned pair.
  bool feasible = false;
};

void write_diagnostics_csv(std::ostream& out, const SamplerDiagnostics& diag);

struct JM2DResult {
  Vector x0;
  Vector k0;
  SamplerDiagnostics diag;
};

// Called once per level with the state y_i and the score used for its update.
using ScoreObserver =
    std::function<void(const JointSample& y, const Vector& score_x, const Vector& score_k)>;

JM2DResult jm2d_sample(const ScoreModel& model, const InteractionPotential& potential,
                       const ModelBasedPrior& prior, const JM2DConfig& cfg, const Rng& rng,
                       const ScoreObserver& observer = {});

}  // namespace jm2d
