// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jm2d/maze.hpp"
#include "test_support.hpp"

using namespace jm2d;
using Eigen::Vector2d;
using jm2d::test::vec;

namespace {

MazeSpec open_field() {
  MazeSpec m = MazeSpec::default_maze();
  m.walls.clear();
  return m;
}

bool tube_contains(const std::vector<Box>& tube, const Vector2d& p, double radius) {
  for (const Box& b : tube) {
    if ((p.array() - radius >= b.lo.array()).all() && (p.array() + radius <= b.hi.array()).all()) {
      return true;
    }
  }
  return false;
}

// Continuous-time position within a step: p + v tau + a tau^2 / 2 with the clipped action.
Vector2d intra_step(const RobotState& s, const Vector2d& a, double tau, const MazeParams& prm) {
  const Vector2d ac = a.cwiseMax(-prm.a_max).cwiseMin(prm.a_max);
  return s.p + s.v * tau + 0.5 * ac * tau * tau;
}

}  // namespace

TEST_SUITE("maze") {
  TEST_CASE("double-integrator step") {
    const MazeParams prm;
    const RobotState s0;
    const RobotState s1 = step_dynamics(s0, Vector2d(1.0, 0.0), prm);
    CHECK(s1.v.x() == doctest::Approx(0.1));
    CHECK(s1.v.y() == 0.0);
    CHECK(s1.p.x() == doctest::Approx(0.005));
    // Actions are clipped to a_max and velocity to v_max.
    const RobotState s2 = step_dynamics(s0, Vector2d(5.0, -5.0), prm);
    CHECK(s2.v.x() == doctest::Approx(0.1));
    CHECK(s2.v.y() == doctest::Approx(-0.1));
    RobotState fast;
    fast.v = Vector2d(1.95, 0.0);
    CHECK(step_dynamics(fast, Vector2d(1.0, 0.0), prm).v.x() == doctest::Approx(2.0));
  }

  TEST_CASE("braking from unit speed stops after half a unit") {
    const MazeParams prm;
    RobotState s;
    s.v = Vector2d(1.0, 0.0);
    int steps = 0;
    while (s.v.norm() > 0.0 && steps < 100) {
      s = step_dynamics(s, braking_action(s.v, prm), prm);
      ++steps;
    }
    CHECK(s.v.norm() == 0.0);
    CHECK(s.p.x() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(steps <= 11);
  }

  TEST_CASE("wall inflation") {
    MazeSpec m = open_field();
    m.walls.push_back({Vector2d(2.0, 2.5), Vector2d(3.0, 3.5)});
    const MazeSpec inflated = inflate_walls(m, 0.1);
    CHECK(inflated.walls[0].size().x() == doctest::Approx(1.2));
    CHECK(inflated.walls[0].size().y() == doctest::Approx(1.2));
    CHECK(inflated.walls[0].center().x() == doctest::Approx(2.5));
    CHECK_THROWS_AS(inflate_walls(m, -0.1), std::invalid_argument);

    MazeSpec near_goal = open_field();
    near_goal.walls.push_back({Vector2d(5.0, 1.0), Vector2d(5.1, 3.0)});
    CHECK_NOTHROW(inflate_walls(near_goal, 0.05));
    CHECK_THROWS_AS(inflate_walls(near_goal, 0.5), ConfigurationError);

    MazeSpec near_start = open_field();
    near_start.walls.push_back({Vector2d(1.0, 1.0), Vector2d(1.1, 3.0)});
    CHECK_THROWS_AS(inflate_walls(near_start, 0.4), ConfigurationError);
  }

  TEST_CASE("signed overlap and check_safe examples") {
    const Box wall{Vector2d(1.0, 1.0), Vector2d(2.0, 2.0)};
    CHECK(signed_overlap({Vector2d(0.0, 0.0), Vector2d(1.2, 3.0)}, wall) == doctest::Approx(0.1));
    CHECK(signed_overlap({Vector2d(0.0, 0.0), Vector2d(1.0, 1.5)}, wall) == doctest::Approx(0.0));
    CHECK(signed_overlap({Vector2d(0.0, 0.0), Vector2d(0.6, 1.5)}, wall) == doctest::Approx(-0.2));
    // A box buried in the wall overlaps by its own half-width.
    CHECK(signed_overlap({Vector2d(1.2, 1.3), Vector2d(1.4, 1.5)}, wall) == doctest::Approx(0.1));

    MazeSpec m = open_field();
    m.walls.push_back(wall);
    CHECK(check_safe({{Vector2d(0.5, 0.5), Vector2d(0.6, 0.6)}}, m) == doctest::Approx(-0.2));
    // Leaving the arena counts as unsafe by the exit distance.
    CHECK(check_safe({{Vector2d(5.5, 0.2), Vector2d(6.3, 0.4)}}, m) == doctest::Approx(0.3));
    CHECK_THROWS(check_safe({}, m));
  }

  TEST_CASE("backup maneuver and its tube") {
    const MazeParams prm;
    RobotState s;
    s.v = Vector2d(1.0, 0.0);
    // Decelerate during the acceleration phase, then brake: rest after half a unit.
    const auto actions = backup_actions(s, Vector2d(-1.0, 0.0), BackupVariant::high_quality, prm);
    RobotState cur = s;
    for (const Vector2d& a : actions) cur = step_dynamics(cur, a, prm);
    CHECK(cur.v.norm() == 0.0);
    CHECK(cur.p.x() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(prm.accel_steps() == 5);

    const auto tube = backup_reach_tube(s, Vector2d(-1.0, 0.0), BackupVariant::high_quality, prm, 0.1);
    CHECK(tube.size() == actions.size());
    const double pad = 0.1 + prm.tube_margin();
    CHECK(tube.back().hi.x() == doctest::Approx(0.5 + pad).epsilon(1e-9));
    CHECK(tube.front().lo.x() == doctest::Approx(-pad));

    const auto rest = backup_reach_tube(RobotState{}, Vector2d::Zero(), BackupVariant::high_quality,
                                        prm, 0.1);
    REQUIRE(rest.size() == 1);
    CHECK(rest[0].size().x() == doctest::Approx(2.0 * pad));
  }

  TEST_CASE("quadrant variants clamp the backup action") {
    const MazeParams prm;
    const Vector2d k(-0.5, 0.7);
    CHECK(clamp_backup_action(k, BackupVariant::x_plus_y_plus, prm) == Vector2d(0.0, 0.7));
    CHECK(clamp_backup_action(k, BackupVariant::x_minus_y_minus, prm) == Vector2d(-0.5, 0.0));
    CHECK(clamp_backup_action(Vector2d(3.0, 0.0), BackupVariant::high_quality, prm) ==
          Vector2d(1.0, 0.0));
    const ModelBasedPrior p = backup_prior(BackupVariant::x_minus_y_minus, prm);
    CHECK(p.lower() == vec({-1.0, -1.0}));
    CHECK(p.upper() == vec({0.0, 0.0}));
    CHECK(parse_backup_variant("x_plus_y_plus") == BackupVariant::x_plus_y_plus);
    CHECK_THROWS(parse_backup_variant("sideways"));
  }

  TEST_CASE("property: the reach tube covers the continuous maneuver") {
    const MazeParams prm;
    Rng gen(57);
    for (int trial = 0; trial < 300; ++trial) {
      RobotState s;
      s.p = Vector2d(gen.uniform(1.0, 5.0), gen.uniform(1.0, 3.0));
      s.v = Vector2d(gen.uniform(-2.0, 2.0), gen.uniform(-2.0, 2.0));
      const Vector2d k(gen.uniform(-1.5, 1.5), gen.uniform(-1.5, 1.5));
      const auto variant = static_cast<BackupVariant>(gen.below(3));
      const auto tube = backup_reach_tube(s, k, variant, prm, 0.1);
      RobotState cur = s;
      for (const Vector2d& a : backup_actions(s, k, variant, prm)) {
        for (int sub = 0; sub <= 10; ++sub) {
          REQUIRE(tube_contains(tube, intra_step(cur, a, prm.dt * sub / 10.0, prm), 0.1));
        }
        cur = step_dynamics(cur, a, prm);
      }
    }
  }

  TEST_CASE("open-field objective matches the closed-form rollout") {
    const MazeSpec m = open_field();
    const MazeParams& prm = m.params;
    Rng gen(12);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector2d a(gen.uniform(-0.9, 0.9), gen.uniform(-0.9, 0.9));
      Vector plan(prm.plan_dim());
      for (int h = 0; h < prm.horizon; ++h) plan.segment<2>(2 * h) = a;
      const double t = prm.commit_steps * prm.dt;
      const Vector2d end = m.start.p + 0.5 * a * t * t;
      const PotentialTerms terms = maze_terms(m, m.start, BackupVariant::high_quality, plan,
                                              vec({0.0, 0.0}));
      CHECK(terms.objective == doctest::Approx((end - m.goal).norm()).epsilon(1e-12));
    }
    CHECK_THROWS(maze_terms(m, m.start, BackupVariant::high_quality, vec({0.0, 0.0}),
                            vec({0.0, 0.0})));
  }

  TEST_CASE("maze potential flags plans that hit a wall") {
    const MazeSpec m = MazeSpec::default_maze();
    const MazeParams& prm = m.params;
    RobotState s;
    s.p = Vector2d(1.9, 2.0);
    s.v = Vector2d(2.0, 0.0);
    Vector rush = Vector::Zero(prm.plan_dim());
    for (int h = 0; h < prm.horizon; ++h) rush[2 * h] = 1.0;
    CHECK(maze_terms(m, s, BackupVariant::high_quality, rush, vec({0.0, 0.0})).constraint > 0.0);

    RobotState rest;
    rest.p = Vector2d(1.0, 2.0);
    const Vector hold = Vector::Zero(prm.plan_dim());
    const InteractionPotential pot = maze_potential(m, rest, BackupVariant::high_quality, 0.5);
    CHECK(pot.terms(hold, vec({0.0, 0.0})).constraint <= 0.0);
    CHECK(pot.terms(hold, vec({0.0, 0.0})).constraint ==
          maze_terms(m, rest, BackupVariant::high_quality, hold, vec({0.0, 0.0})).constraint);
  }

  TEST_CASE("demonstrations are collision free and reach the goal") {
    const MazeSpec m = MazeSpec::default_maze();
    Rng rng(7);
    const DemoSet demos = generate_demos(m, 20, rng);
    CHECK(demos.trajectories.size() == 20);
    for (const auto& traj : demos.trajectories) {
      CHECK(m.at_goal(traj.back().p));
      for (std::size_t i = 1; i < traj.size(); ++i) {
        const Box seg{traj[i - 1].p.cwiseMin(traj[i].p).array() - m.robot_radius,
                      traj[i - 1].p.cwiseMax(traj[i].p).array() + m.robot_radius};
        REQUIRE(check_safe({seg}, m) <= 0.0);
      }
    }
    for (const DemoWindow& w : demos.windows) {
      CHECK(w.plan.size() == m.params.plan_dim());
      CHECK(w.plan.cwiseAbs().maxCoeff() <= m.params.a_max + 1e-12);
    }

    const GaussianMixtureScoreModel prior = local_prior(demos, m.start);
    CHECK(prior.dim() == m.params.plan_dim());
    CHECK(prior.components() >= 8);
    CHECK(prior.components() <= 10);
    CHECK(prior.variances()(0, 0) == doctest::Approx(0.07 * 0.07));
  }

  TEST_CASE("open-field demos push toward the goal from the start") {
    const MazeSpec m = open_field();
    DemoOptions opts;
    opts.scattered_fraction = 0.0;
    Rng rng(11);
    const DemoSet demos = generate_demos(m, 10, rng, opts);
    const int H = m.params.horizon;
    int first_windows = 0;
    for (const DemoWindow& w : demos.windows) {
      bool first = false;
      for (const auto& traj : demos.trajectories) {
        first = first || (w.start.p == traj.front().p && w.start.v == traj.front().v);
      }
      if (!first) continue;
      ++first_windows;
      double fx = 0.0;
      for (int t = 0; t < 8; ++t) fx += w.plan[2 * t];
      CHECK(fx > 0.0);
    }
    CHECK(first_windows == 10);

    Rng one(12);
    const DemoSet single = generate_demos(m, 1, one, opts);
    const int steps = static_cast<int>(single.trajectories.front().size()) - 1;
    const int lower = std::max(0, (steps - H + opts.stride - 1) / opts.stride);
    CHECK(static_cast<int>(single.windows.size()) >= lower);
  }

  TEST_CASE("unfiltered rollouts with no inflation mostly succeed") {
    const MazeSpec m = MazeSpec::default_maze();
    Rng demo_rng(7);
    const DemoSet demos = generate_demos(m, 200, demo_rng);
    const JM2DConfig cfg = JM2DConfig::with_steps(25);
    int successes = 0;
    constexpr int kEpisodes = 50;
    for (int ep = 0; ep < kEpisodes; ++ep) {
      const EpisodeMetrics r = run_episode(m, 0.0, MazeSampler::unfiltered, cfg,
                                           BackupVariant::high_quality, demos,
                                           Rng(0).split(0xE1, static_cast<std::uint64_t>(ep)));
      successes += r.safe_success;
      CHECK(r.interventions == 0);
    }
    MESSAGE("unfiltered success " << successes << "/" << kEpisodes);
    CHECK(successes >= 45);
  }

  TEST_CASE("episode csv") {
    std::ostringstream out;
    EpisodeRecord r;
    r.seed = 3;
    r.w = 0.1;
    r.metrics.safe_success = true;
    r.metrics.task_horizon = 120;
    r.metrics.intervention_rate = 0.25;
    write_episode_csv(out, {r});
    CHECK(out.str() ==
          "seed,sampler,w,variant,safe_success,collided,task_horizon,intervention_rate\n"
          "3,jm2d,0.1,high_quality,1,0,120,0.25\n");
  }
}
