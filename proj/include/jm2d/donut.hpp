// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "jm2d/baselines.hpp"
#include "jm2d/common.hpp"
#include "jm2d/interaction.hpp"
#include "jm2d/score_model.hpp"

namespace jm2d {

struct DonutSpec {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double r_inner = 1.2;
  double r_outer = 2.0;
  int components = 32;
  double band_tolerance = 0.4;

  void validate() const;
  double ring_radius() const { return 0.5 * (r_inner + r_outer); }
  double ring_sigma() const { return 0.25 * (r_outer - r_inner); }
  double band_lower() const { return r_inner - band_tolerance; }
  double band_upper() const { return r_outer + band_tolerance; }
};

struct Disc {
  Eigen::Vector2d center;
  double radius = 0.0;
};

/// x = (start, goal) on two independent rings, k = a single waypoint.
struct JointToySpec {
  DonutSpec donut;
  std::vector<Disc> obstacles{{Eigen::Vector2d(0.0, 1.6), 0.6}, {Eigen::Vector2d(0.0, -1.6), 0.6}};
  Eigen::Vector2d k_lower = Eigen::Vector2d::Constant(-3.0);
  Eigen::Vector2d k_upper = Eigen::Vector2d::Constant(3.0);
  double lambda = 1.0;

  void validate() const;
};

/// Feasible set = union of an on-ring disc and a disc inside the hole.
struct CGToySpec {
  DonutSpec donut;
  Disc on_ring{Eigen::Vector2d(1.6, 0.0), 0.5};
  Disc in_hole{Eigen::Vector2d(0.0, 0.0), 0.5};

  void validate() const;
};

GaussianMixtureScoreModel donut_prior(const DonutSpec& spec);
/// 4-D start (x) goal prior, evaluated block-wise.
std::shared_ptr<const ProductScoreModel> donut_joint_prior(const DonutSpec& spec);

double point_segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& c);

/// J = -(|start - k| + |k - goal|); g = max(worst disc penetration of either segment,
/// box violation of k).
PotentialTerms joint_toy_terms(const JointToySpec& spec, const Vector& x, const Vector& k);
InteractionPotential joint_toy_potential(const JointToySpec& spec);
ModelBasedPrior joint_toy_prior(const JointToySpec& spec);

/// min over the two discs of |x - c| - r.
double cg_constraint(const CGToySpec& spec, const Vector& x);
/// Nearest point of the feasible union (x itself when already feasible).
Vector cg_project(const CGToySpec& spec, const Vector& x);
StatePotential cg_potential(const CGToySpec& spec);
/// 0.5 max(g, 0)^2 and its gradient.
DifferentiableCost cg_cost(const CGToySpec& spec);

double constraint_alignment(const VectorSet& samples,
                            const std::function<double(const Vector&)>& constraint);

bool in_band(const DonutSpec& spec, const Vector& x);

struct FidelityMetrics {
  double band_fraction = 0.0;
  double chamfer = 0.0;
};

/// Mean of the two directed mean nearest-neighbour distances.
double chamfer_distance(const VectorSet& a, const VectorSet& b);
FidelityMetrics data_fidelity(const VectorSet& samples, const DonutSpec& spec,
                              const VectorSet& reference);

VectorSet donut_reference(const DonutSpec& spec, int count, Rng& rng);
/// Prior draws restricted to the feasible set, by rejection. Throws
/// ConfigurationError when `max_draws` proposals do not yield `count` points.
VectorSet constrained_reference(const CGToySpec& spec, int count, Rng& rng,
                                int max_draws = 1000000);

/// One row per point: x1..xd, feasible, in_band.
void write_sample_cloud(std::ostream& out, const VectorSet& samples,
                        const std::vector<bool>& feasible, const std::vector<bool>& in_band);

}  // namespace jm2d
