// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jm2d/baselines.hpp"
#include "jm2d/maze.hpp"
#include "jm2d/sampler.hpp"
#include "jm2d/score_model.hpp"

namespace jm2d {

namespace {

GaussianMixtureScoreModel oracle_mixture() {
  Vector m0(2), m1(2), m2(2), v0(2), v1(2), v2(2);
  m0 << -1.5, 0.5;
  m1 << 1.0, 1.2;
  m2 << 0.3, -1.4;
  v0 << 0.20, 0.10;
  v1 << 0.05, 0.30;
  v2 << 0.15, 0.15;
  return GaussianMixtureScoreModel({0.5, 0.3, 0.2}, {m0, m1, m2}, {v0, v1, v2});
}

}  // namespace

ScoreOracleReport score_oracle(int points, int levels, int n_x, int n_k, int steps,
                               double z_tolerance, double allowed_fraction, std::uint64_t seed) {
  const GaussianMixtureScoreModel model = oracle_mixture();
  JM2DConfig cfg = JM2DConfig::with_steps(steps);
  cfg.n_x = n_x;
  cfg.n_k = n_k;
  const InteractionPotential flat([](const Vector&, const Vector&) { return PotentialTerms{0.0, -1.0}; },
                                  1.0);
  const ModelBasedPrior k_prior = ModelBasedPrior::uniform_box(Vector::Constant(2, -2.0),
                                                               Vector::Constant(2, 2.0));
  const Rng root(seed);

  ScoreOracleReport rep;
  for (int lv = 0; lv < levels; ++lv) {
    const int i = std::clamp(static_cast<int>(std::lround(steps * (lv + 0.5) / levels)), 1, steps);
    const double a = cfg.x_schedule.alpha(i);
    for (int pt = 0; pt < points; ++pt) {
      Rng draw = root.split(1, static_cast<std::uint64_t>(lv), static_cast<std::uint64_t>(pt));
      JointSample y;
      y.level = i;
      y.x = forward_perturb(model.sample(draw), a, draw);
      y.k = draw.normal_vector(2);
      const Rng stream = root.split(2, static_cast<std::uint64_t>(lv), static_cast<std::uint64_t>(pt));
      const McSamples mc = sample_mc(i, y.x, y.k, model, cfg, stream);
      const JointScore est = joint_score(y, mc, flat, k_prior, cfg);
      const Vector exact = model.score(y.x, a);

      // Standard error of the plain mean of Tweedie scores over X.
      Vector mean = Vector::Zero(2);
      Vector sq = Vector::Zero(2);
      for (const Vector& x0 : mc.xs) {
        const Vector s = tweedie_score(x0, y.x, a);
        mean += s;
        sq += s.cwiseProduct(s);
      }
      const double n = static_cast<double>(mc.xs.size());
      mean /= n;
      const Vector var = (sq / n - mean.cwiseProduct(mean)) * (n / (n - 1.0));
      for (Eigen::Index d = 0; d < 2; ++d) {
        const double se = std::sqrt(std::max(var[d], 1e-300) / n);
        const double z = (est.score_x[d] - exact[d]) / se;
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(z));
        rep.mean_z += z;
        if (!(std::abs(z) <= z_tolerance)) ++rep.exceedances;
        ++rep.comparisons;
      }
    }
  }
  if (rep.comparisons > 0) rep.mean_z /= rep.comparisons;
  rep.pass = rep.comparisons > 0 &&
             rep.exceedances <= static_cast<int>(std::floor(allowed_fraction * rep.comparisons));
  return rep;
}

ReductionReport reduction_oracle(int runs, int n_x, int n_k, double tolerance, std::uint64_t seed) {
  const GaussianMixtureScoreModel model = oracle_mixture();
  JM2DConfig cfg;
  cfg.n_x = n_x;
  cfg.n_k = n_k;
  const double lambda = 0.7;
  Vector cx(2), ck(2);
  cx << 0.8, 0.9;
  ck << 0.4, -0.3;
  auto jx = [cx](const Vector& x) { return (x - cx).squaredNorm(); };
  auto jk = [ck](const Vector& k) { return (k - ck).squaredNorm(); };
  const InteractionPotential joint(
      [jx, jk](const Vector& x, const Vector& k) { return PotentialTerms{jx(x) + jk(k), -1.0}; },
      lambda);
  const StatePotential vx([jx](const Vector& x) { return PotentialTerms{jx(x), -1.0}; }, lambda);
  // Wide enough to hold every proposal draw, so p(k) is constant where it is evaluated.
  const ModelBasedPrior k_prior = ModelBasedPrior::uniform_box(Vector::Constant(2, -1e4),
                                                               Vector::Constant(2, 1e4));

  ReductionReport rep;
  for (int r = 0; r < runs; ++r) {
    const Rng rng = Rng(seed).split(3, static_cast<std::uint64_t>(r));
    std::vector<Vector> joint_x, cg_x, joint_k, ref_k;
    std::vector<bool> ref_defined;
    jm2d_sample(model, joint, k_prior, cfg, rng,
                [&](const JointSample& y, const Vector& sx, const Vector& sk) {
                  joint_x.push_back(sx);
                  joint_k.push_back(sk);
                  // Vk-only weighted Tweedie score over the same proposal draws.
                  const VectorSet ks = sample_proposal_k(y.level, y.k, cfg, rng);
                  const double ak = cfg.k_schedule.alpha(y.level);
                  double max_log = -std::numeric_limits<double>::infinity();
                  for (const Vector& k : ks) {
                    if (k_prior.in_support(k)) max_log = std::max(max_log, -jk(k) / lambda);
                  }
                  Vector acc = Vector::Zero(2);
                  double total = 0.0;
                  for (const Vector& k : ks) {
                    if (!k_prior.in_support(k)) continue;
                    const double w = std::exp(-jk(k) / lambda - max_log);
                    acc += w * tweedie_score(k, y.k, ak);
                    total += w;
                  }
                  ref_defined.push_back(total > 0.0);
                  ref_k.push_back(total > 0.0 ? Vector(acc / total) : Vector(sk));
                });
    conditional_generate(model, vx, cfg, rng,
                         [&](const JointSample&, const Vector& sx, const Vector&) {
                           cg_x.push_back(sx);
                         });
    for (std::size_t l = 0; l < joint_x.size() && l < cg_x.size(); ++l) {
      rep.max_x_diff = std::max(rep.max_x_diff, (joint_x[l] - cg_x[l]).lpNorm<Eigen::Infinity>());
      if (ref_defined[l]) {
        rep.max_k_diff =
            std::max(rep.max_k_diff, (joint_k[l] - ref_k[l]).lpNorm<Eigen::Infinity>());
      }
      ++rep.levels_compared;
    }
    if (joint_x.size() != cg_x.size()) rep.max_x_diff = std::numeric_limits<double>::infinity();
  }
  rep.pass = rep.levels_compared > 0 && rep.max_x_diff <= tolerance && rep.max_k_diff <= tolerance;
  return rep;
}

TubeReport tube_soundness(int triples, std::uint64_t seed) {
  const MazeSpec maze = MazeSpec::default_maze();
  const MazeParams& prm = maze.params;
  constexpr int kSub = 10;
  Rng rng = Rng(seed).split(4);
  TubeReport rep;
  for (int n = 0; n < triples; ++n) {
    RobotState s;
    s.p = Eigen::Vector2d(rng.uniform(0.5, 5.5), rng.uniform(0.5, 3.5));
    s.v = Eigen::Vector2d(rng.uniform(-prm.v_max, prm.v_max), rng.uniform(-prm.v_max, prm.v_max));
    if (rng.uniform() < 0.1) s.v.setZero();
    const Eigen::Vector2d k(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const auto variant = static_cast<BackupVariant>(rng.below(3));

    const auto tube = backup_reach_tube(s, k, variant, prm, maze.robot_radius);
    const auto actions = backup_actions(s, k, variant, prm);
    RobotState fine = s;
    bool ok = true;
    for (std::size_t t = 0; t < actions.size() && ok; ++t) {
      const Box& box = tube.size() == 1 ? tube.front() : tube[std::min(t, tube.size() - 1)];
      const Box inner{box.lo.array() + maze.robot_radius, box.hi.array() - maze.robot_radius};
      for (int sub = 0; sub <= kSub; ++sub) {
        if (!inner.contains(fine.p)) {
          ok = false;
          break;
        }
        if (sub < kSub) fine = step_dynamics(fine, actions[t], prm.dt / kSub, prm.a_max, prm.v_max);
      }
    }
    if (tube.size() != 1 && tube.size() != actions.size()) ok = false;
    if (!ok) ++rep.violations;
    ++rep.triples;
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace jm2d
