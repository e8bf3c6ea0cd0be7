// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "jm2d/common.hpp"
#include "jm2d/interaction.hpp"
#include "jm2d/rng.hpp"
#include "jm2d/sampler.hpp"
#include "jm2d/score_model.hpp"

namespace jm2d {

struct Box {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;

  Eigen::Vector2d center() const { return 0.5 * (lo + hi); }
  Eigen::Vector2d size() const { return hi - lo; }
  Box inflated(double w) const;
  bool contains(const Eigen::Vector2d& p) const;
};

struct RobotState {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  Eigen::Vector2d v = Eigen::Vector2d::Zero();

  Vector stacked() const;
};

struct MazeParams {
  double dt = 0.1;
  double a_max = 1.0;
  double v_max = 2.0;
  double v_stop = 0.05;
  double backup_accel_time = 0.5;
  int horizon = 32;      // H
  int commit_steps = 8;  // T_a
  int max_steps = 600;   // T_max

  int plan_dim() const { return 2 * horizon; }
  int accel_steps() const;
  // Discretization margin of the backup tube, 0.5 v_max dt.
  double tube_margin() const { return 0.5 * v_max * dt; }
  // Deviation of a constant-acceleration step from its chord, a_max dt^2 / 8.
  double chord_margin() const { return a_max * dt * dt / 8.0; }
};

struct MazeSpec {
  std::vector<Box> walls;
  Box bounds{Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(6.0, 4.0)};
  RobotState start;
  Eigen::Vector2d goal = Eigen::Vector2d(5.4, 2.0);
  double goal_radius = 0.3;
  double robot_radius = 0.1;
  MazeParams params;

  /// U-shaped three-wall obstacle opening toward the start, with a wider
  /// passage above it than below.
  static MazeSpec default_maze();
  void validate() const;
  bool at_goal(const Eigen::Vector2d& p) const { return (p - goal).norm() <= goal_radius; }
};

enum class BackupVariant { high_quality, x_plus_y_plus, x_minus_y_minus };

std::string_view to_string(BackupVariant variant);
BackupVariant parse_backup_variant(std::string_view name);
ModelBasedPrior backup_prior(BackupVariant variant, const MazeParams& params);
/// Clamp k into the variant's quadrant and the actuation box.
Eigen::Vector2d clamp_backup_action(const Eigen::Vector2d& k, BackupVariant variant,
                                    const MazeParams& params);

/// p' = p + v dt + a dt^2 / 2, v' = v + a dt; a clipped to +-a_max and v' to +-v_max per axis.
RobotState step_dynamics(const RobotState& s, const Eigen::Vector2d& a, double dt, double a_max,
                         double v_max);
RobotState step_dynamics(const RobotState& s, const Eigen::Vector2d& a, const MazeParams& params);

/// Saturated braking a_c = -sign(v_c) min(a_max, |v_c| / dt); reaches v = 0 exactly.
Eigen::Vector2d braking_action(const Eigen::Vector2d& v, const MazeParams& params);

/// Every wall grown by w on all sides. Throws ConfigurationError when the
/// start or the goal region stops being free.
MazeSpec inflate_walls(const MazeSpec& maze, double w);

/// Actions of the backup maneuver: k for the acceleration phase, then braking to rest.
std::vector<Eigen::Vector2d> backup_actions(const RobotState& s, const Eigen::Vector2d& k,
                                            BackupVariant variant, const MazeParams& params);

/// One box per maneuver step: the swept segment between consecutive positions
/// grown by robot_radius + tube margin. A maneuver that never moves yields a single box.
std::vector<Box> backup_reach_tube(const RobotState& s, const Eigen::Vector2d& k,
                                   BackupVariant variant, const MazeParams& params,
                                   double robot_radius);

/// Per-axis interval intersection halved, minimum over axes: > 0 overlap, 0 touching, < 0 apart.
double signed_overlap(const Box& a, const Box& b);
/// Largest signed overlap between any box and any wall, or the largest bounds exit
/// when that is greater.
double check_safe(const std::vector<Box>& tube, const MazeSpec& maze);

struct PlanRollout {
  std::vector<RobotState> states;  // T_a + 1 states, first is the start
  std::vector<Box> boxes;
};

/// First `steps` actions of the flattened plan, executed from s.
PlanRollout rollout_plan(const RobotState& s, const Vector& plan, int steps, const MazeSpec& maze);

/// J = distance from the end of the committed segment to the goal;
/// g = max(check_safe(segment boxes), check_safe(backup tube from the segment end)).
PotentialTerms maze_terms(const MazeSpec& maze, const RobotState& s, BackupVariant variant,
                          const Vector& plan, const Vector& k);
InteractionPotential maze_potential(const MazeSpec& maze, const RobotState& s,
                                    BackupVariant variant, double lambda);

struct DemoOptions {
  double margin_lo = 0.12;
  double margin_hi = 0.45;
  double bounds_margin = 0.1;
  double cruise_lo = 0.6;
  double cruise_hi = 1.0;
  // Bias of the vertical route preference; 0 is unbiased, +1 favours the upper route.
  double skew = 0.0;
  double route_cost = 0.6;
  double grid = 0.05;
  int stride = 4;
  // Share of demos starting at rest from a random free position instead of the maze start.
  double scattered_fraction = 0.5;
  int max_steps = 500;
};

struct DemoWindow {
  RobotState start;
  Vector plan;
};

struct DemoSet {
  std::vector<DemoWindow> windows;
  std::vector<std::vector<RobotState>> trajectories;
};

/// Grid search on the uninflated maze (per-demo clearance margin and route
/// bias), tracked by a velocity controller and sliced into H-step windows
/// padded with braking actions. Throws ConfigurationError when the goal is unreachable.
DemoSet generate_demos(const MazeSpec& maze, int count, Rng& rng, const DemoOptions& opts = {});

struct LocalPriorOptions {
  double radius = 0.5;  // rho, in stacked (p, v) distance
  int min_windows = 8;
  int max_windows = 10;
  double bandwidth = 0.07;
};

/// KDE over the plans of demo windows whose start state is near s.
GaussianMixtureScoreModel local_prior(const DemoSet& demos, const RobotState& s,
                                      const LocalPriorOptions& opts = {});

enum class MazeSampler { jm2d, sequential, gibbs, unfiltered };

std::string_view to_string(MazeSampler sampler);
MazeSampler parse_maze_sampler(std::string_view name);

struct EpisodeOptions {
  double lambda = 0.5;
  int gibbs_rounds = 3;
  LocalPriorOptions prior;
};

struct EpisodeMetrics {
  bool safe_success = false;
  bool collided = false;
  int task_horizon = 0;
  double intervention_rate = 0.0;
  int replans = 0;
  int interventions = 0;
};

/// Receding-horizon filtered rollout. Collisions are judged on the uninflated maze.
EpisodeMetrics run_episode(const MazeSpec& maze, double w, MazeSampler sampler,
                           const JM2DConfig& cfg, BackupVariant variant, const DemoSet& demos,
                           const Rng& rng, const EpisodeOptions& opts = {});

struct EpisodeRecord {
  std::uint64_t seed = 0;
  MazeSampler sampler = MazeSampler::jm2d;
  double w = 0.0;
  BackupVariant variant = BackupVariant::high_quality;
  EpisodeMetrics metrics;
};

void write_episode_csv(std::ostream& out, const std::vector<EpisodeRecord>& records);

}  // namespace jm2d
