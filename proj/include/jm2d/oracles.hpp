// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace jm2d {

// Self-checks shared by the `oracle` subcommand and the oracle_suite experiment.

struct ScoreOracleReport {
  double max_abs_z = 0.0;  // worst |estimate - analytic| / standard error over points and dims
  double mean_z = 0.0;     // signed mean; drifts from 0 under systematic bias
  int comparisons = 0;     // points x levels x dims
  int exceedances = 0;     // comparisons with |z| > z_tolerance
  bool pass = false;
};

/// Joint-score x channel with V == 1 and a uniform p(k) against the closed-form
/// mixture score, at `points` random x_i for each of `levels` noise levels.
/// Passes when at most `allowed_fraction` of the comparisons exceed
/// `z_tolerance` standard errors.
ScoreOracleReport score_oracle(int points, int levels, int n_x, int n_k, int steps,
                               double z_tolerance, double allowed_fraction, std::uint64_t seed);

struct ReductionReport {
  double max_x_diff = 0.0;
  double max_k_diff = 0.0;
  int levels_compared = 0;
  bool pass = false;
};

/// Separable V = Vx Vk with uniform p(k): per-level joint scores against
/// conditional generation (x) and a Vk-only weighted Tweedie score (k).
ReductionReport reduction_oracle(int runs, int n_x, int n_k, double tolerance, std::uint64_t seed);

struct TubeReport {
  int triples = 0;
  int violations = 0;
  bool pass = false;
};

/// Random (state, k, variant) triples: a dt/10 simulation of the backup
/// maneuver must stay inside the tube box of the matching step.
TubeReport tube_soundness(int triples, std::uint64_t seed);

}  // namespace jm2d
