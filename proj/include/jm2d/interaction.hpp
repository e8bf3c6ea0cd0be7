// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string_view>

#include "jm2d/common.hpp"
#include "jm2d/rng.hpp"

namespace jm2d {

/// Objective J and constraint g of one (x, k) pair; feasible iff constraint <= 0.
struct PotentialTerms {
  double objective = 0.0;
  double constraint = 0.0;
};

/// V(x, k) = exp(-J(k | x) / lambda) * 1(g(k | x) <= 0).
///
/// Environments that do expensive per-plan work (rollouts) supply a binder
/// x -> (k -> terms) so that work is shared across the k candidates of one x.
class InteractionPotential {
 public:
  using PairFn = std::function<PotentialTerms(const Vector& x, const Vector& k)>;
  using BoundFn = std::function<PotentialTerms(const Vector& k)>;
  using BindFn = std::function<BoundFn(const Vector& x)>;

  InteractionPotential(PairFn terms, double lambda);
  static InteractionPotential from_binder(BindFn bind, double lambda);

  double lambda() const { return lambda_; }

  PotentialTerms terms(const Vector& x, const Vector& k) const;
  BoundFn bind(const Vector& x) const;

  /// Throws EvaluationError when J or g is not finite.
  double evaluate(const Vector& x, const Vector& k) const;
  double weight(const PotentialTerms& t, const Vector& x, const Vector& k) const;
  /// g <= 0, checked without forming exp(-J / lambda), which can underflow.
  bool admissible(const PotentialTerms& t, const Vector& x, const Vector& k) const;

 private:
  InteractionPotential() = default;
  BindFn bind_;
  double lambda_ = 1.0;
};

/// x-only potential V^x(x) = exp(-J(x) / lambda) * 1(g(x) <= 0), used for conditional generation.
class StatePotential {
 public:
  using TermsFn = std::function<PotentialTerms(const Vector& x)>;

  StatePotential(TermsFn terms, double lambda);
  /// V^x(x) = V(x, k) with k held fixed.
  static StatePotential bind_k(const InteractionPotential& potential, const Vector& k);
  /// V^x == 1.
  static StatePotential uniform();

  double lambda() const { return lambda_; }
  PotentialTerms terms(const Vector& x) const { return terms_(x); }
  double evaluate(const Vector& x) const;
  double weight(const PotentialTerms& t, const Vector& x) const;
  bool admissible(const PotentialTerms& t, const Vector& x) const;

 private:
  TermsFn terms_;
  double lambda_ = 1.0;
};

double evaluate_potential(const InteractionPotential& potential, const Vector& x0, const Vector& k0);

enum class PriorKind { uniform_box, gaussian };

/// Model-based prior p(k): a uniform box or a diagonal Gaussian.
class ModelBasedPrior {
 public:
  static ModelBasedPrior uniform_box(Vector lower, Vector upper);
  static ModelBasedPrior gaussian(Vector mean, Vector variance);

  PriorKind kind() const { return kind_; }
  Eigen::Index dim() const { return a_.size(); }
  // uniform_box: lower/upper; gaussian: mean/variance
  const Vector& lower() const { return a_; }
  const Vector& upper() const { return b_; }

  double density(const Vector& k) const;
  bool in_support(const Vector& k) const;
  // grad_k log of the prior after forward noising at level alpha in (0, 1).
  Vector noisy_score(const Vector& k, double alpha) const;
  Vector sample(Rng& rng) const;

 private:
  ModelBasedPrior(PriorKind kind, Vector a, Vector b);
  PriorKind kind_;
  Vector a_;
  Vector b_;
  double box_density_ = 0.0;
};

double prior_density(const ModelBasedPrior& prior, const Vector& k0);

struct PostprocessResult {
  Vector k;
  bool feasible = false;
  PotentialTerms terms;
};

inline constexpr int kDefaultPostprocessBudget = 256;

/// Budgeted random search standing in for argmin_k J(k | x0) s.t. g(k | x0) <= 0.
/// Draws `budget` candidates from the prior; returns the feasible one with the
/// smallest J, or the candidate with the smallest g (feasible = false) when none is feasible.
PostprocessResult postprocess_optimize(const InteractionPotential& potential,
                                       const ModelBasedPrior& prior, const Vector& x0, Rng& rng,
                                       int budget = kDefaultPostprocessBudget);

}  // namespace jm2d
