// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jm2d {

namespace {

Vector init_x(const ScoreModel& model, const Rng& rng) {
  return rng.split(stream_tag::kInitX).normal_vector(model.dim());
}

Vector denoise_x(const Vector& x, const Vector& score, const JM2DConfig& cfg, int i,
                 const Rng& rng) {
  Rng noise = rng.split(stream_tag::kNoiseX, static_cast<std::uint64_t>(i));
  return reverse_step(x, score, cfg.x_schedule.alpha(i), cfg.x_schedule.alpha(i - 1),
                      cfg.sigma_policy.sigma(cfg.x_schedule, i), noise);
}

}  // namespace

Vector unguided_sample(const ScoreModel& model, const JM2DConfig& cfg, const Rng& rng) {
  Vector x = init_x(model, rng);
  for (int i = cfg.steps(); i >= 1; --i) {
    x = denoise_x(x, model.score(x, cfg.x_schedule.alpha(i)), cfg, i, rng);
  }
  return x;
}

BaselineResult sequential_sample(const ScoreModel& model, const InteractionPotential& potential,
                                 const ModelBasedPrior& prior, const JM2DConfig& cfg,
                                 const Rng& rng) {
  cfg.validate();
  BaselineResult out;
  out.x0 = unguided_sample(model, cfg, rng);
  Rng post = rng.split(stream_tag::kPostprocess);
  const PostprocessResult k = postprocess_optimize(potential, prior, out.x0, post,
                                                   cfg.postprocess_budget);
  out.k0 = k.k;
  out.feasible = k.feasible;
  out.iterations = 1;
  return out;
}

Vector sample_k_given_x(const InteractionPotential& potential, const ModelBasedPrior& prior,
                        const Vector& x, int budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("k | x sampler budget must be >= 1");
  const auto bound = potential.bind(x);
  VectorSet candidates;
  std::vector<double> logw;
  candidates.reserve(static_cast<std::size_t>(budget));
  logw.reserve(static_cast<std::size_t>(budget));
  double max_logw = -std::numeric_limits<double>::infinity();
  std::size_t least_violating = 0;
  double least_g = std::numeric_limits<double>::infinity();
  for (int c = 0; c < budget; ++c) {
    Vector k = prior.sample(rng);
    const PotentialTerms t = bound(k);
    const double lw = potential.admissible(t, x, k) ? -t.objective / potential.lambda()
                                                    : -std::numeric_limits<double>::infinity();
    if (t.constraint < least_g) {
      least_g = t.constraint;
      least_violating = candidates.size();
    }
    max_logw = std::max(max_logw, lw);
    logw.push_back(lw);
    candidates.push_back(std::move(k));
  }
  if (max_logw == -std::numeric_limits<double>::infinity()) return candidates[least_violating];

  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - max_logw);
    total += w;
  }
  double u = rng.uniform() * total;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    u -= logw[c];
    if (u < 0.0 && logw[c] > 0.0) return candidates[c];
  }
  // Rounding left u >= 0: take the last positive-weight candidate.
  for (std::size_t c = candidates.size(); c-- > 0;) {
    if (logw[c] > 0.0) return candidates[c];
  }
  return candidates.back();
}

BaselineResult gibbs_sample(const ScoreModel& model, const InteractionPotential& potential,
                            const ModelBasedPrior& prior, const JM2DConfig& cfg, int rounds,
                            const Rng& rng) {
  cfg.validate();
  if (rounds < 1) throw std::invalid_argument("Gibbs needs at least one round");
  BaselineResult out;
  out.x0 = unguided_sample(model, cfg, rng);
  Vector k;
  for (int r = 0; r < rounds; ++r) {
    Rng k_stream = rng.split(stream_tag::kGibbs, static_cast<std::uint64_t>(r), 0);
    k = sample_k_given_x(potential, prior, out.x0, cfg.postprocess_budget, k_stream);
    out.x0 = conditional_generate(model, StatePotential::bind_k(potential, k), cfg,
                                  rng.split(stream_tag::kGibbs, static_cast<std::uint64_t>(r), 1));
  }
  out.k0 = k;
  out.feasible = potential.terms(out.x0, k).constraint <= 0.0;
  out.iterations = rounds;
  return out;
}

Vector conditional_generate(const ScoreModel& model, const StatePotential& potential,
                            const JM2DConfig& cfg, const Rng& rng, const ScoreObserver& observer) {
  cfg.validate();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Vector x = init_x(model, rng);
  for (int i = cfg.steps(); i >= 1; --i) {
    const double a = cfg.x_schedule.alpha(i);
    const VectorSet xs = sample_clean_x(i, x, model, cfg, rng);

    Eigen::VectorXd logw(static_cast<Eigen::Index>(xs.size()));
    double max_logw = neg_inf;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const PotentialTerms t = potential.terms(xs[j]);
      const double lw = potential.admissible(t, xs[j]) ? -t.objective / potential.lambda() : neg_inf;
      logw[static_cast<Eigen::Index>(j)] = lw;
      max_logw = std::max(max_logw, lw);
    }
    Eigen::VectorXd w = max_logw == neg_inf ? Eigen::VectorXd::Ones(logw.size())
                                            : Eigen::VectorXd((logw.array() - max_logw).unaryExpr([](double v) { return std::exp(v); }));

    Vector score = Vector::Zero(x.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double wj = w[static_cast<Eigen::Index>(j)];
      if (wj != 0.0) score += wj * tweedie_score(xs[j], x, a);
    }
    score /= w.sum();
    if (observer) observer(JointSample{x, Vector(), i}, score, Vector());
    x = denoise_x(x, score, cfg, i, rng);
  }
  return x;
}

Vector projection_guided_sample(const ScoreModel& model, const Projection& project,
                                const JM2DConfig& cfg, const Rng& rng) {
  if (!project) throw std::invalid_argument("projection baseline needs a projection");
  Vector x = init_x(model, rng);
  for (int i = cfg.steps(); i >= 1; --i) {
    x = project(denoise_x(x, model.score(x, cfg.x_schedule.alpha(i)), cfg, i, rng));
  }
  return x;
}

Vector gradient_guided_sample(const ScoreModel& model, const DifferentiableCost& cost,
                              double scale, const JM2DConfig& cfg, const Rng& rng) {
  if (!cost.gradient) throw std::invalid_argument("gradient baseline needs a cost gradient");
  Vector x = init_x(model, rng);
  for (int i = cfg.steps(); i >= 1; --i) {
    const double a = cfg.x_schedule.alpha(i);
    if (scale != 0.0) {
      const Vector grad = cost.gradient(x);
      if (!grad.allFinite()) {
        throw EvaluationError("non-finite cost gradient at x=" + format_vector(x));
      }
      x -= scale * (1.0 - a) * grad;
    }
    x = denoise_x(x, model.score(x, a), cfg, i, rng);
  }
  return x;
}

}  // namespace jm2d
