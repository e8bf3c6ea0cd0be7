// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/maze.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>

#include "jm2d/baselines.hpp"

namespace jm2d {

using Eigen::Vector2d;

namespace {

constexpr std::uint64_t kReplanTag = 0x6001;

Box hull(const Vector2d& a, const Vector2d& b, double pad) {
  return {a.cwiseMin(b).array() - pad, a.cwiseMax(b).array() + pad};
}

double bounds_exit(const Box& box, const Box& bounds) {
  return std::max((bounds.lo - box.lo).maxCoeff(), (box.hi - bounds.hi).maxCoeff());
}

double point_box_distance(const Vector2d& p, const Box& b) {
  const Vector2d d = (b.lo - p).cwiseMax(p - b.hi).cwiseMax(0.0);
  return d.norm();
}

}  // namespace

Box Box::inflated(double w) const { return {lo.array() - w, hi.array() + w}; }

bool Box::contains(const Vector2d& p) const {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

Vector RobotState::stacked() const {
  Vector s(4);
  s << p, v;
  return s;
}

int MazeParams::accel_steps() const {
  return static_cast<int>(std::lround(backup_accel_time / dt));
}

MazeSpec MazeSpec::default_maze() {
  MazeSpec m;
  m.walls = {
      {Vector2d(2.2, 2.9), Vector2d(3.6, 3.1)},  // upper arm
      {Vector2d(2.2, 0.7), Vector2d(3.6, 0.9)},  // lower arm
      {Vector2d(3.4, 0.7), Vector2d(3.6, 3.1)},  // back wall
  };
  m.start.p = Vector2d(0.6, 2.0);
  return m;
}

void MazeSpec::validate() const {
  if (!(bounds.lo.array() < bounds.hi.array()).all()) {
    throw ConfigurationError("maze bounds must have lo < hi");
  }
  for (const Box& w : walls) {
    if (!(w.lo.array() <= w.hi.array()).all()) throw ConfigurationError("maze wall has lo > hi");
  }
  if (!(robot_radius > 0.0)) throw ConfigurationError("robot radius must be > 0");
  if (!(goal_radius > 0.0)) throw ConfigurationError("goal radius must be > 0");
  if (params.commit_steps < 1 || params.commit_steps > params.horizon) {
    throw ConfigurationError("commit steps must lie in [1, H]");
  }
  if (!start.p.allFinite() || !start.v.allFinite()) throw ConfigurationError("start not finite");
  if (check_safe({hull(start.p, start.p, robot_radius)}, *this) > 0.0) {
    throw ConfigurationError("maze start collides");
  }
  if (check_safe({hull(goal, goal, robot_radius)}, *this) > 0.0) {
    throw ConfigurationError("maze goal is not free");
  }
}

std::string_view to_string(BackupVariant variant) {
  switch (variant) {
    case BackupVariant::high_quality:
      return "high_quality";
    case BackupVariant::x_plus_y_plus:
      return "x_plus_y_plus";
    case BackupVariant::x_minus_y_minus:
      return "x_minus_y_minus";
  }
  return "high_quality";
}

BackupVariant parse_backup_variant(std::string_view name) {
  if (name == "high_quality") return BackupVariant::high_quality;
  if (name == "x_plus_y_plus") return BackupVariant::x_plus_y_plus;
  if (name == "x_minus_y_minus") return BackupVariant::x_minus_y_minus;
  throw std::invalid_argument("unknown backup variant '" + std::string(name) + "'");
}

ModelBasedPrior backup_prior(BackupVariant variant, const MazeParams& params) {
  const double a = params.a_max;
  switch (variant) {
    case BackupVariant::x_plus_y_plus:
      return ModelBasedPrior::uniform_box(Vector::Zero(2), Vector::Constant(2, a));
    case BackupVariant::x_minus_y_minus:
      return ModelBasedPrior::uniform_box(Vector::Constant(2, -a), Vector::Zero(2));
    case BackupVariant::high_quality:
      break;
  }
  return ModelBasedPrior::uniform_box(Vector::Constant(2, -a), Vector::Constant(2, a));
}

Vector2d clamp_backup_action(const Vector2d& k, BackupVariant variant, const MazeParams& params) {
  Vector2d out = k.cwiseMax(-params.a_max).cwiseMin(params.a_max);
  if (variant == BackupVariant::x_plus_y_plus) out = out.cwiseMax(0.0);
  if (variant == BackupVariant::x_minus_y_minus) out = out.cwiseMin(0.0);
  return out;
}

RobotState step_dynamics(const RobotState& s, const Vector2d& a, double dt, double a_max,
                         double v_max) {
  const Vector2d ac = a.cwiseMax(-a_max).cwiseMin(a_max);
  RobotState next;
  next.p = s.p + s.v * dt + 0.5 * ac * dt * dt;
  next.v = (s.v + ac * dt).cwiseMax(-v_max).cwiseMin(v_max);
  return next;
}

RobotState step_dynamics(const RobotState& s, const Vector2d& a, const MazeParams& params) {
  return step_dynamics(s, a, params.dt, params.a_max, params.v_max);
}

Vector2d braking_action(const Vector2d& v, const MazeParams& params) {
  Vector2d a;
  for (int c = 0; c < 2; ++c) {
    const double mag = std::min(params.a_max, std::abs(v[c]) / params.dt);
    a[c] = v[c] > 0.0 ? -mag : (v[c] < 0.0 ? mag : 0.0);
  }
  return a;
}

MazeSpec inflate_walls(const MazeSpec& maze, double w) {
  if (!(w >= 0.0)) throw std::invalid_argument("inflation width must be >= 0");
  MazeSpec out = maze;
  for (Box& b : out.walls) b = b.inflated(w);
  const auto rest_tube =
      backup_reach_tube(out.start, Vector2d::Zero(), BackupVariant::high_quality, out.params,
                        out.robot_radius);
  if (check_safe(rest_tube, out) > 0.0) {
    throw ConfigurationError("inflation " + std::to_string(w) + " blocks the start position");
  }
  if (check_safe({hull(out.goal, out.goal, out.robot_radius)}, out) > 0.0) {
    throw ConfigurationError("inflation " + std::to_string(w) + " covers the goal");
  }
  return out;
}

std::vector<Vector2d> backup_actions(const RobotState& s, const Vector2d& k,
                                     BackupVariant variant, const MazeParams& params) {
  std::vector<Vector2d> actions;
  const Vector2d kc = clamp_backup_action(k, variant, params);
  RobotState cur = s;
  for (int t = 0; t < params.accel_steps(); ++t) {
    actions.push_back(kc);
    cur = step_dynamics(cur, kc, params);
  }
  // Each braking step removes min(a_max dt, |v_c|) per axis.
  const int cap = static_cast<int>(std::ceil(params.v_max / (params.a_max * params.dt))) + 4;
  int braking = 0;
  while (cur.v.norm() > params.v_stop) {
    if (++braking > cap) throw std::logic_error("braking law failed to terminate");
    const Vector2d a = braking_action(cur.v, params);
    actions.push_back(a);
    cur = step_dynamics(cur, a, params);
  }
  if (cur.v.norm() > 0.0) actions.push_back(braking_action(cur.v, params));
  return actions;
}

std::vector<Box> backup_reach_tube(const RobotState& s, const Vector2d& k, BackupVariant variant,
                                   const MazeParams& params, double robot_radius) {
  const double pad = robot_radius + params.tube_margin();
  std::vector<Box> tube;
  RobotState cur = s;
  bool moved = false;
  for (const Vector2d& a : backup_actions(s, k, variant, params)) {
    const RobotState next = step_dynamics(cur, a, params);
    moved = moved || next.p != cur.p;
    tube.push_back(hull(cur.p, next.p, pad));
    cur = next;
  }
  if (!moved) return {hull(s.p, s.p, pad)};
  return tube;
}

double signed_overlap(const Box& a, const Box& b) {
  const Vector2d o = a.hi.cwiseMin(b.hi) - a.lo.cwiseMax(b.lo);
  return 0.5 * o.minCoeff();
}

double check_safe(const std::vector<Box>& tube, const MazeSpec& maze) {
  if (tube.empty()) throw std::invalid_argument("check_safe: empty tube");
  double g = -std::numeric_limits<double>::infinity();
  for (const Box& b : tube) {
    g = std::max(g, bounds_exit(b, maze.bounds));
    for (const Box& w : maze.walls) g = std::max(g, signed_overlap(b, w));
  }
  return g;
}

PlanRollout rollout_plan(const RobotState& s, const Vector& plan, int steps, const MazeSpec& maze) {
  if (plan.size() < 2 * steps) throw std::invalid_argument("rollout_plan: plan too short");
  PlanRollout r;
  r.states.reserve(static_cast<std::size_t>(steps) + 1);
  r.boxes.reserve(static_cast<std::size_t>(steps));
  r.states.push_back(s);
  const double pad = maze.robot_radius + maze.params.chord_margin();
  for (int t = 0; t < steps; ++t) {
    const RobotState next =
        step_dynamics(r.states.back(), Vector2d(plan[2 * t], plan[2 * t + 1]), maze.params);
    r.boxes.push_back(hull(r.states.back().p, next.p, pad));
    r.states.push_back(next);
  }
  return r;
}

namespace {

struct BoundPlan {
  RobotState end;
  double objective = 0.0;
  double plan_constraint = 0.0;
};

BoundPlan bind_plan(const MazeSpec& maze, const RobotState& s, const Vector& plan) {
  if (plan.size() != maze.params.plan_dim()) {
    throw std::invalid_argument("maze plan has dimension " + std::to_string(plan.size()) +
                                ", expected " + std::to_string(maze.params.plan_dim()));
  }
  const PlanRollout r = rollout_plan(s, plan, maze.params.commit_steps, maze);
  return {r.states.back(), (r.states.back().p - maze.goal).norm(), check_safe(r.boxes, maze)};
}

PotentialTerms bound_terms(const MazeSpec& maze, const BoundPlan& b, BackupVariant variant,
                           const Vector& k) {
  if (k.size() != 2) throw std::invalid_argument("maze backup parameter must be 2-D");
  if (b.plan_constraint > 0.0) return {b.objective, b.plan_constraint};
  const auto tube = backup_reach_tube(b.end, Vector2d(k[0], k[1]), variant, maze.params,
                                      maze.robot_radius);
  return {b.objective, std::max(b.plan_constraint, check_safe(tube, maze))};
}

}  // namespace

PotentialTerms maze_terms(const MazeSpec& maze, const RobotState& s, BackupVariant variant,
                          const Vector& plan, const Vector& k) {
  return bound_terms(maze, bind_plan(maze, s, plan), variant, k);
}

InteractionPotential maze_potential(const MazeSpec& maze, const RobotState& s,
                                    BackupVariant variant, double lambda) {
  auto shared = std::make_shared<const MazeSpec>(maze);
  return InteractionPotential::from_binder(
      [shared, s, variant](const Vector& plan) -> InteractionPotential::BoundFn {
        const BoundPlan b = bind_plan(*shared, s, plan);
        return [shared, b, variant](const Vector& k) {
          return bound_terms(*shared, b, variant, k);
        };
      },
      lambda);
}

// ---------------------------------------------------------------------------
// Demonstrations

namespace {

struct Grid {
  Vector2d origin;
  double h = 0.05;
  int nx = 0;
  int ny = 0;
  std::vector<char> blocked;

  int index(int ix, int iy) const { return iy * nx + ix; }
  Vector2d center(int ix, int iy) const { return origin + Vector2d(ix + 0.5, iy + 0.5) * h; }
  std::pair<int, int> cell(const Vector2d& p) const {
    const int ix = std::clamp(static_cast<int>((p.x() - origin.x()) / h), 0, nx - 1);
    const int iy = std::clamp(static_cast<int>((p.y() - origin.y()) / h), 0, ny - 1);
    return {ix, iy};
  }
};

Grid make_grid(const MazeSpec& maze, double h, double margin, double bounds_margin) {
  Grid g;
  g.origin = maze.bounds.lo;
  g.h = h;
  g.nx = static_cast<int>(std::ceil(maze.bounds.size().x() / h));
  g.ny = static_cast<int>(std::ceil(maze.bounds.size().y() / h));
  g.blocked.assign(static_cast<std::size_t>(g.nx * g.ny), 0);
  const double wall_clear = maze.robot_radius + margin;
  const double edge_clear = maze.robot_radius + bounds_margin;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const Vector2d c = g.center(ix, iy);
      bool b = (c - maze.bounds.lo).minCoeff() < edge_clear ||
               (maze.bounds.hi - c).minCoeff() < edge_clear;
      for (const Box& w : maze.walls) b = b || point_box_distance(c, w) < wall_clear;
      g.blocked[static_cast<std::size_t>(g.index(ix, iy))] = b ? 1 : 0;
    }
  }
  return g;
}

// 8-connected A*; step cost scaled by a vertical route preference.
std::optional<std::vector<Vector2d>> grid_search(const Grid& g, const Vector2d& from,
                                                 const Vector2d& to, double route_bias,
                                                 double route_cost, double mid_y, double half_h) {
  const auto [sx, sy] = g.cell(from);
  const auto [tx, ty] = g.cell(to);
  if (g.blocked[static_cast<std::size_t>(g.index(sx, sy))] ||
      g.blocked[static_cast<std::size_t>(g.index(tx, ty))]) {
    return std::nullopt;
  }
  auto multiplier = [&](double y) {
    return 1.0 - route_cost * route_bias * std::clamp((y - mid_y) / half_h, -1.0, 1.0);
  };
  const double h_scale = 1.0 - route_cost * std::abs(route_bias);
  const std::size_t n = g.blocked.size();
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  const int s = g.index(sx, sy);
  const int t = g.index(tx, ty);
  cost[static_cast<std::size_t>(s)] = 0.0;
  open.emplace(0.0, s);
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (u == t) break;
    const int ux = u % g.nx;
    const int uy = u / g.nx;
    const Vector2d uc = g.center(ux, uy);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int vx = ux + dx;
        const int vy = uy + dy;
        if (vx < 0 || vy < 0 || vx >= g.nx || vy >= g.ny) continue;
        const int v = g.index(vx, vy);
        if (g.blocked[static_cast<std::size_t>(v)]) continue;
        const Vector2d vc = g.center(vx, vy);
        const double step = (vc - uc).norm() * multiplier(0.5 * (uc.y() + vc.y()));
        const double c = cost[static_cast<std::size_t>(u)] + step;
        if (c < cost[static_cast<std::size_t>(v)]) {
          cost[static_cast<std::size_t>(v)] = c;
          parent[static_cast<std::size_t>(v)] = u;
          open.emplace(c + h_scale * (vc - g.center(tx, ty)).norm(), v);
        }
      }
    }
  }
  if (parent[static_cast<std::size_t>(t)] < 0 && s != t) return std::nullopt;
  std::vector<Vector2d> path;
  for (int c = t; c != s; c = parent[static_cast<std::size_t>(c)]) {
    path.push_back(g.center(c % g.nx, c / g.nx));
  }
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  path.back() = to;
  return path;
}

struct Tracked {
  std::vector<RobotState> states;
  std::vector<Vector2d> actions;
  bool reached = false;
};

// Look-ahead velocity tracking along a polyline, then braking to rest.
Tracked track_path(const MazeSpec& maze, const RobotState& start, const std::vector<Vector2d>& path,
                   double cruise, int max_steps) {
  const MazeParams& prm = maze.params;
  std::vector<double> arc(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) arc[i] = arc[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = arc.back();
  constexpr double kLookahead = 0.35;
  constexpr double kGain = 2.0;
  constexpr double kDecel = 0.5;

  auto point_at = [&](double s) {
    s = std::clamp(s, 0.0, total);
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    const std::size_t i = it == arc.end() ? path.size() - 1 : static_cast<std::size_t>(it - arc.begin());
    if (i == 0) return path.front();
    const double seg = arc[i] - arc[i - 1];
    const double u = seg > 0.0 ? (s - arc[i - 1]) / seg : 1.0;
    return Vector2d(path[i - 1] + u * (path[i] - path[i - 1]));
  };

  Tracked out;
  out.states.push_back(start);
  std::size_t idx = 0;
  for (int step = 0; step < max_steps; ++step) {
    const RobotState& s = out.states.back();
    while (idx + 1 < path.size() && (path[idx + 1] - s.p).norm() <= (path[idx] - s.p).norm()) ++idx;
    const double progress = arc[idx];
    const double remaining = total - progress + (path[idx] - s.p).norm();
    if ((s.p - maze.goal).norm() < 0.03 && s.v.norm() < 0.03) {
      out.reached = true;
      break;
    }
    const Vector2d target = point_at(progress + kLookahead);
    Vector2d dir = target - s.p;
    const double dn = dir.norm();
    dir = dn > 1e-9 ? Vector2d(dir / dn) : Vector2d::Zero();
    const double speed = std::min({cruise, std::sqrt(2.0 * kDecel * remaining), 2.0 * dn});
    const Vector2d a = (kGain * (speed * dir - s.v)).cwiseMax(-prm.a_max).cwiseMin(prm.a_max);
    out.actions.push_back(a);
    out.states.push_back(step_dynamics(s, a, prm));
  }
  // Come to rest wherever tracking stopped.
  while (out.states.back().v.norm() > 0.0 && out.actions.size() < static_cast<std::size_t>(max_steps) + 64) {
    const Vector2d a = braking_action(out.states.back().v, prm);
    out.actions.push_back(a);
    out.states.push_back(step_dynamics(out.states.back(), a, prm));
    if (out.states.back().v.norm() < 1e-12) break;
  }
  return out;
}

bool trajectory_clear(const MazeSpec& maze, const std::vector<RobotState>& states) {
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (check_safe({hull(states[i - 1].p, states[i].p, maze.robot_radius)}, maze) > 0.0) return false;
  }
  return true;
}

}  // namespace

DemoSet generate_demos(const MazeSpec& maze, int count, Rng& rng, const DemoOptions& opts) {
  if (count < 1) throw std::invalid_argument("generate_demos: count must be >= 1");
  maze.validate();
  const MazeParams& prm = maze.params;
  const double mid_y = maze.bounds.center().y();
  const double half_h = 0.5 * maze.bounds.size().y();
  constexpr int kAttempts = 64;

  DemoSet out;
  for (int d = 0; d < count; ++d) {
    Rng demo_rng = rng.split(0xD3, static_cast<std::uint64_t>(d));
    bool done = false;
    for (int attempt = 0; attempt < kAttempts && !done; ++attempt) {
      double margin = demo_rng.uniform(opts.margin_lo, opts.margin_hi);
      const double bias = std::clamp(demo_rng.uniform(-1.0, 1.0) + opts.skew, -1.0, 1.0);
      const double cruise = demo_rng.uniform(opts.cruise_lo, opts.cruise_hi);

      RobotState start;
      if (demo_rng.uniform() < opts.scattered_fraction) {
        start.p = Vector2d(demo_rng.uniform(maze.bounds.lo.x(), maze.bounds.hi.x()),
                           demo_rng.uniform(maze.bounds.lo.y(), maze.bounds.hi.y()));
        if (check_safe({hull(start.p, start.p, maze.robot_radius + 0.15)}, maze) > 0.0) continue;
        if ((start.p - maze.goal).norm() < 2.0 * maze.goal_radius) continue;
      } else {
        start.p = maze.start.p + Vector2d(demo_rng.uniform(-0.15, 0.15), demo_rng.uniform(-0.15, 0.15));
        if (check_safe({hull(start.p, start.p, maze.robot_radius)}, maze) > 0.0) start.p = maze.start.p;
      }

      std::optional<std::vector<Vector2d>> path;
      while (!path && margin > 0.02) {
        const Grid grid = make_grid(maze, opts.grid, margin, opts.bounds_margin);
        path = grid_search(grid, start.p, maze.goal, bias, opts.route_cost, mid_y, half_h);
        if (!path) margin *= 0.7;
      }
      if (!path) {
        if (attempt + 1 == kAttempts) throw ConfigurationError("maze goal unreachable from demo start");
        continue;
      }

      Tracked tr = track_path(maze, start, *path, cruise, opts.max_steps);
      if (!tr.reached || !maze.at_goal(tr.states.back().p) || !trajectory_clear(maze, tr.states)) {
        continue;
      }

      const int n = static_cast<int>(tr.actions.size());
      for (int t0 = 0; t0 < n; t0 += opts.stride) {
        DemoWindow w;
        w.start = tr.states[static_cast<std::size_t>(t0)];
        w.plan = Vector::Zero(prm.plan_dim());
        for (int h = 0; h < prm.horizon && t0 + h < n; ++h) {
          w.plan.segment<2>(2 * h) = tr.actions[static_cast<std::size_t>(t0 + h)];
        }
        out.windows.push_back(std::move(w));
      }
      out.trajectories.push_back(std::move(tr.states));
      done = true;
    }
    if (!done) throw ConfigurationError("could not produce a collision-free demonstration");
  }
  return out;
}

GaussianMixtureScoreModel local_prior(const DemoSet& demos, const RobotState& s,
                                      const LocalPriorOptions& opts) {
  if (demos.windows.empty()) throw std::invalid_argument("local_prior: no demonstration windows");
  const Vector q = s.stacked();
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(demos.windows.size());
  for (std::size_t i = 0; i < demos.windows.size(); ++i) {
    dist.emplace_back((demos.windows[i].start.stacked() - q).norm(), i);
  }
  std::sort(dist.begin(), dist.end());
  std::size_t take = 0;
  while (take < dist.size() && dist[take].first <= opts.radius) ++take;
  take = std::clamp(take, std::min(static_cast<std::size_t>(opts.min_windows), dist.size()),
                    static_cast<std::size_t>(opts.max_windows));
  take = std::min(take, dist.size());
  VectorSet plans;
  plans.reserve(take);
  for (std::size_t i = 0; i < take; ++i) plans.push_back(demos.windows[dist[i].second].plan);
  return fit_kde(plans, opts.bandwidth);
}

std::string_view to_string(MazeSampler sampler) {
  switch (sampler) {
    case MazeSampler::jm2d:
      return "jm2d";
    case MazeSampler::sequential:
      return "sequential";
    case MazeSampler::gibbs:
      return "gibbs";
    case MazeSampler::unfiltered:
      return "unfiltered";
  }
  return "jm2d";
}

MazeSampler parse_maze_sampler(std::string_view name) {
  if (name == "jm2d") return MazeSampler::jm2d;
  if (name == "sequential") return MazeSampler::sequential;
  if (name == "gibbs") return MazeSampler::gibbs;
  if (name == "unfiltered") return MazeSampler::unfiltered;
  throw std::invalid_argument("unknown maze sampler '" + std::string(name) + "'");
}

EpisodeMetrics run_episode(const MazeSpec& maze, double w, MazeSampler sampler,
                           const JM2DConfig& cfg, BackupVariant variant, const DemoSet& demos,
                           const Rng& rng, const EpisodeOptions& opts) {
  const MazeSpec inflated = inflate_walls(maze, w);
  const MazeParams& prm = maze.params;
  const ModelBasedPrior k_prior = backup_prior(variant, prm);

  EpisodeMetrics m;
  RobotState state = maze.start;
  Vector2d stored_backup = Vector2d::Zero();
  int t = 0;
  bool finished = false;

  // Returns true once the episode is over.
  auto execute = [&](const Vector2d& a) {
    const RobotState next = step_dynamics(state, a, prm);
    if (check_safe({hull(state.p, next.p, maze.robot_radius)}, maze) > 0.0) m.collided = true;
    state = next;
    ++t;
    if (m.collided) return true;
    if (maze.at_goal(state.p)) {
      m.safe_success = true;
      return true;
    }
    return t >= prm.max_steps;
  };

  if (maze.at_goal(state.p)) {
    m.safe_success = true;
    finished = true;
  }
  while (!finished && t < prm.max_steps) {
    const GaussianMixtureScoreModel prior = local_prior(demos, state, opts.prior);
    const Rng r = rng.split(kReplanTag, static_cast<std::uint64_t>(m.replans));
    ++m.replans;

    Vector plan;
    Vector2d backup = Vector2d::Zero();
    bool verified = false;
    if (sampler == MazeSampler::unfiltered) {
      plan = unguided_sample(prior, cfg, r);
      verified = true;
    } else {
      const InteractionPotential potential = maze_potential(inflated, state, variant, opts.lambda);
      Vector k;
      if (sampler == MazeSampler::jm2d) {
        JM2DResult res = jm2d_sample(prior, potential, k_prior, cfg, r);
        plan = std::move(res.x0);
        k = std::move(res.k0);
      } else if (sampler == MazeSampler::sequential) {
        BaselineResult res = sequential_sample(prior, potential, k_prior, cfg, r);
        plan = std::move(res.x0);
        k = *res.k0;
      } else {
        BaselineResult res = gibbs_sample(prior, potential, k_prior, cfg, opts.gibbs_rounds, r);
        plan = std::move(res.x0);
        k = *res.k0;
      }
      // The filter verifies the pair itself rather than trusting the sampler's flag.
      verified = maze_terms(inflated, state, variant, plan, k).constraint <= 0.0;
      backup = Vector2d(k[0], k[1]);
    }

    if (verified) {
      for (int s = 0; s < prm.commit_steps && !finished; ++s) {
        finished = execute(Vector2d(plan[2 * s], plan[2 * s + 1]));
      }
      stored_backup = backup;
    } else {
      ++m.interventions;
      const auto actions = backup_actions(state, stored_backup, variant, prm);
      int used = 0;
      for (const Vector2d& a : actions) {
        if (finished) break;
        finished = execute(a);
        ++used;
      }
      // At rest the backup is a hold; keep the replan cadence.
      for (; used < prm.commit_steps && !finished; ++used) finished = execute(Vector2d::Zero());
      stored_backup = Vector2d::Zero();
    }
  }
  m.task_horizon = t;
  m.intervention_rate =
      m.replans > 0 ? static_cast<double>(m.interventions) / static_cast<double>(m.replans) : 0.0;
  return m;
}

void write_episode_csv(std::ostream& out, const std::vector<EpisodeRecord>& records) {
  out << "seed,sampler,w,variant,safe_success,collided,task_horizon,intervention_rate\n";
  char buf[256];
  for (const EpisodeRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%llu,%s,%.6g,%s,%d,%d,%d,%.6g\n",
                  static_cast<unsigned long long>(r.seed), std::string(to_string(r.sampler)).c_str(),
                  r.w, std::string(to_string(r.variant)).c_str(), r.metrics.safe_success ? 1 : 0,
                  r.metrics.collided ? 1 : 0, r.metrics.task_horizon, r.metrics.intervention_rate);
    out << buf;
  }
}

}  // namespace jm2d
