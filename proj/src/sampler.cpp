// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace jm2d {

void JM2DConfig::validate() const {
  if (n_x < 1) throw std::invalid_argument("N must be >= 1");
  if (n_k < 1) throw std::invalid_argument("N_K must be >= 1");
  if (x_schedule.steps() != k_schedule.steps()) {
    throw std::invalid_argument("x and k schedules must share the step count");
  }
  if (x_schedule.steps() < 1) throw std::invalid_argument("schedules need at least one step");
  if (postprocess_budget < 1) throw std::invalid_argument("postprocess budget must be >= 1");
  sigma_policy.validate();
  clean_cfg.validate();
}

JM2DConfig JM2DConfig::with_steps(int steps, ScheduleKind x_kind, ScheduleKind k_kind) {
  JM2DConfig cfg;
  cfg.x_schedule = make_schedule(x_kind, steps);
  cfg.k_schedule = make_schedule(k_kind, steps);
  return cfg;
}

VectorSet sample_clean_x(int i, const Vector& xi, const ScoreModel& model, const JM2DConfig& cfg,
                         const Rng& rng) {
  if (i < 1) throw std::invalid_argument("sample_mc: level must be >= 1");
  VectorSet xs;
  xs.reserve(static_cast<std::size_t>(cfg.n_x));
  for (int j = 0; j < cfg.n_x; ++j) {
    Rng stream = rng.split(stream_tag::kCleanX, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(j));
    xs.push_back(estimate_clean(model, cfg.x_schedule, i, xi, cfg.clean_cfg, cfg.sigma_policy,
                                stream));
  }
  return xs;
}

VectorSet sample_proposal_k(int i, const Vector& ki, const JM2DConfig& cfg, const Rng& rng) {
  if (i < 1) throw std::invalid_argument("sample_mc: level must be >= 1");
  const double a = cfg.k_schedule.alpha(i);
  const Vector mean = ki / std::sqrt(a);
  const double sd = std::sqrt(std::max(0.0, 1.0 / a - 1.0));
  VectorSet ks;
  ks.reserve(static_cast<std::size_t>(cfg.n_k));
  for (int l = 0; l < cfg.n_k; ++l) {
    Rng stream = rng.split(stream_tag::kProposalK, static_cast<std::uint64_t>(i),
                           static_cast<std::uint64_t>(l));
    ks.push_back(mean + sd * stream.normal_vector(ki.size()));
  }
  return ks;
}

McSamples sample_mc(int i, const Vector& xi, const Vector& ki, const ScoreModel& model,
                    const JM2DConfig& cfg, const Rng& rng) {
  return {sample_clean_x(i, xi, model, cfg, rng), sample_proposal_k(i, ki, cfg, rng)};
}

Eigen::MatrixXd importance_weights(const McSamples& mc, const InteractionPotential& potential,
                                   const ModelBasedPrior& prior, bool paired) {
  const auto nx = static_cast<Eigen::Index>(mc.xs.size());
  const auto nk = static_cast<Eigen::Index>(mc.ks.size());
  if (nx == 0 || nk == 0) throw std::invalid_argument("importance_weights: empty candidate set");

  std::vector<double> log_prior(static_cast<std::size_t>(nk));
  for (Eigen::Index l = 0; l < nk; ++l) {
    const double p = prior.density(mc.ks[static_cast<std::size_t>(l)]);
    log_prior[static_cast<std::size_t>(l)] =
        p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }

  // Log weights first; the shift by the maximum is the single constant c.
  const double lambda = potential.lambda();
  const double neg_inf = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd logw = Eigen::MatrixXd::Constant(nx, nk, neg_inf);
  double max_logw = neg_inf;
  for (Eigen::Index j = 0; j < nx; ++j) {
    const Vector& x = mc.xs[static_cast<std::size_t>(j)];
    bool bound = false;
    InteractionPotential::BoundFn terms;
    const Eigen::Index l_begin = paired ? j : 0;
    const Eigen::Index l_end = paired ? std::min(j + 1, nk) : nk;
    for (Eigen::Index l = l_begin; l < l_end; ++l) {
      const double lp = log_prior[static_cast<std::size_t>(l)];
      if (lp == neg_inf) continue;
      if (!bound) {
        terms = potential.bind(x);
        bound = true;
      }
      const Vector& k = mc.ks[static_cast<std::size_t>(l)];
      const PotentialTerms t = terms(k);
      if (!potential.admissible(t, x, k)) continue;
      const double lw = -t.objective / lambda + lp;
      logw(j, l) = lw;
      max_logw = std::max(max_logw, lw);
    }
  }
  if (max_logw == neg_inf) return Eigen::MatrixXd::Zero(nx, nk);
  // std::exp maps -inf to exactly 0; Eigen's vectorized exp can leave a denormal.
  return (logw.array() - max_logw).unaryExpr([](double v) { return std::exp(v); }).matrix();
}

namespace {

Vector mean_tweedie_score(const VectorSet& clean, const Vector& xi, double alpha,
                          const Eigen::VectorXd& w) {
  Vector acc = Vector::Zero(xi.size());
  const double total = w.sum();
  for (std::size_t j = 0; j < clean.size(); ++j) {
    const double wj = w[static_cast<Eigen::Index>(j)];
    if (wj == 0.0) continue;
    acc += wj * tweedie_score(clean[j], xi, alpha);
  }
  return acc / total;
}

}  // namespace

JointScore weighted_joint_score(const JointSample& y, const McSamples& mc,
                                const Eigen::MatrixXd& weights, const ModelBasedPrior& prior,
                                const JM2DConfig& cfg) {
  if (y.level < 1) throw std::invalid_argument("joint_score: level must be >= 1");
  const auto nx = static_cast<Eigen::Index>(mc.xs.size());
  const auto nk = static_cast<Eigen::Index>(mc.ks.size());
  if (weights.rows() != nx || weights.cols() != nk) {
    throw std::invalid_argument("joint_score: weight matrix does not match candidate sets");
  }
  const double ax = cfg.x_schedule.alpha(y.level);
  const double ak = cfg.k_schedule.alpha(y.level);

  JointScore out;
  out.weight_sum = weights.sum();
  if (!(out.weight_sum > 0.0)) {
    out.all_zero = true;
    out.score_x = mean_tweedie_score(mc.xs, y.x, ax, Eigen::VectorXd::Ones(nx));
    out.score_k = prior.noisy_score(y.k, ak);
    return out;
  }
  // The pair score [s(x_j); s(k_l)] averages into per-channel marginal weights.
  out.score_x = mean_tweedie_score(mc.xs, y.x, ax, weights.rowwise().sum());
  out.score_k = mean_tweedie_score(mc.ks, y.k, ak, weights.colwise().sum().transpose());
  const Eigen::Map<const Eigen::VectorXd> flat(weights.data(), weights.size());
  out.ess = effective_sample_size(flat);
  return out;
}

JointScore joint_score(const JointSample& y, const McSamples& mc,
                       const InteractionPotential& potential, const ModelBasedPrior& prior,
                       const JM2DConfig& cfg) {
  return weighted_joint_score(y, mc, importance_weights(mc, potential, prior, cfg.paired), prior,
                              cfg);
}

std::optional<double> effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& weights) {
  if ((weights.array() < 0.0).any()) {
    throw std::invalid_argument("effective_sample_size: negative weight");
  }
  const double s = weights.sum();
  if (!(s > 0.0)) return std::nullopt;
  return s * s / weights.squaredNorm();
}

void write_diagnostics_csv(std::ostream& out, const SamplerDiagnostics& diag) {
  out << "level,ess,weight_sum,zero_weight_flag\n";
  char buf[128];
  for (const LevelDiagnostics& l : diag.levels) {
    if (l.ess) {
      std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%d\n", l.level, *l.ess, l.weight_sum,
                    l.zero_weight ? 1 : 0);
    } else {
      std::snprintf(buf, sizeof buf, "%d,,%.6g,%d\n", l.level, l.weight_sum, l.zero_weight ? 1 : 0);
    }
    out << buf;
  }
}

JM2DResult jm2d_sample(const ScoreModel& model, const InteractionPotential& potential,
                       const ModelBasedPrior& prior, const JM2DConfig& cfg, const Rng& rng,
                       const ScoreObserver& observer) {
  cfg.validate();
  const int steps = cfg.steps();
  JointSample y;
  y.x = rng.split(stream_tag::kInitX).normal_vector(model.dim());
  y.k = rng.split(stream_tag::kInitK).normal_vector(prior.dim());

  JM2DResult result;
  result.diag.levels.reserve(static_cast<std::size_t>(steps));
  for (int i = steps; i >= 1; --i) {
    y.level = i;
    const McSamples mc = sample_mc(i, y.x, y.k, model, cfg, rng);
    const JointScore s = joint_score(y, mc, potential, prior, cfg);
    if (observer) observer(y, s.score_x, s.score_k);
    result.diag.levels.push_back({i, s.ess, s.weight_sum, s.all_zero});
    if (s.all_zero) ++result.diag.zero_weight_levels;

    const double sigma = cfg.sigma_policy.sigma(cfg.x_schedule, i);
    Rng noise = rng.split(stream_tag::kNoiseX, static_cast<std::uint64_t>(i));
    y.x = reverse_step(y.x, s.score_x, cfg.x_schedule.alpha(i), cfg.x_schedule.alpha(i - 1), sigma,
                       noise);
    y.k = reverse_step(y.k, s.score_k, cfg.k_schedule.alpha(i), cfg.k_schedule.alpha(i - 1), 0.0,
                       Vector(), /*mbd_style=*/true);
  }
  y.level = 0;

  result.x0 = y.x;
  result.k0 = y.k;
  PotentialTerms t = potential.terms(result.x0, result.k0);
  if (!potential.admissible(t, result.x0, result.k0)) {
    Rng post = rng.split(stream_tag::kPostprocess);
    const PostprocessResult fixed =
        postprocess_optimize(potential, prior, result.x0, post, cfg.postprocess_budget);
    result.k0 = fixed.k;
    result.diag.postprocess_invoked = true;
    t = fixed.terms;
  }
  result.diag.final_potential = potential.weight(t, result.x0, result.k0);
  result.diag.feasible = t.constraint <= 0.0;
  return result;
}

}  // namespace jm2d
