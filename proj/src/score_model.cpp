// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/score_model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace jm2d {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

GaussianMixtureScoreModel::GaussianMixtureScoreModel(std::vector<double> weights, VectorSet means,
                                                     VectorSet variances) {
  const auto m = static_cast<Eigen::Index>(weights.size());
  if (m == 0) throw std::invalid_argument("mixture needs at least one component");
  if (means.size() != weights.size() || variances.size() != weights.size()) {
    throw std::invalid_argument("mixture: weights, means and variances must have equal length");
  }
  const Eigen::Index d = means.front().size();
  if (d == 0) throw std::invalid_argument("mixture: zero-dimensional means");

  weights_ = Eigen::Map<const Eigen::VectorXd>(weights.data(), m);
  if (!(weights_.array() > 0.0).all()) throw std::invalid_argument("mixture weights must be > 0");
  if (std::abs(weights_.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  log_weights_ = weights_.array().log();

  means_.resize(d, m);
  variances_.resize(d, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& mu = means[static_cast<std::size_t>(j)];
    const auto& var = variances[static_cast<std::size_t>(j)];
    if (mu.size() != d) throw std::invalid_argument("mixture means must share one dimension");
    if (var.size() != d) throw std::invalid_argument("mixture variance has wrong dimension");
    if (!(var.array() > 0.0).all()) throw std::invalid_argument("mixture variances must be > 0");
    means_.col(j) = mu;
    variances_.col(j) = var;
  }
  mean_sq_norms_ = means_.colwise().squaredNorm().transpose();

  shared_variance_ = variances_(0, 0);
  shared_isotropic_ = (variances_.array() == shared_variance_).all();
}

Eigen::VectorXd GaussianMixtureScoreModel::component_log_terms(const Vector& x,
                                                               double alpha) const {
  const double d = static_cast<double>(dim());
  const double root = std::sqrt(alpha);
  if (shared_isotropic_) {
    const double v = alpha * shared_variance_ + (1.0 - alpha);
    Eigen::VectorXd sq = (x.squaredNorm() - 2.0 * root * (means_.transpose() * x).array() +
                          alpha * mean_sq_norms_.array())
                             .max(0.0)
                             .matrix();
    return log_weights_.array() - 0.5 * sq.array() / v - 0.5 * d * std::log(2.0 * std::numbers::pi * v);
  }
  const Eigen::ArrayXXd v = alpha * variances_.array() + (1.0 - alpha);
  const Eigen::ArrayXXd diff = (-root * means_).colwise() + x;
  const Eigen::ArrayXd quad = (diff.square() / v).colwise().sum().transpose();
  const Eigen::ArrayXd logdet = v.log().colwise().sum().transpose();
  return log_weights_.array() - 0.5 * quad - 0.5 * logdet - 0.5 * d * std::log(2.0 * std::numbers::pi);
}

Vector GaussianMixtureScoreModel::score(const Vector& x, double alpha) const {
  const Eigen::VectorXd logs = component_log_terms(x, alpha);
  const double lse = log_sum_exp(logs);
  const Eigen::VectorXd resp = (logs.array() - lse).exp().matrix();
  const double root = std::sqrt(alpha);
  if (shared_isotropic_) {
    const double v = alpha * shared_variance_ + (1.0 - alpha);
    return -(x - root * (means_ * resp)) / v;
  }
  const Eigen::ArrayXXd v = alpha * variances_.array() + (1.0 - alpha);
  const Eigen::ArrayXXd diff = (-root * means_).colwise() + x;
  return -((diff / v).matrix() * resp);
}

double GaussianMixtureScoreModel::log_density(const Vector& x, double alpha) const {
  return log_sum_exp(component_log_terms(x, alpha));
}

Vector GaussianMixtureScoreModel::sample(Rng& rng) const {
  const double u = rng.uniform();
  Eigen::Index j = 0;
  double acc = weights_[0];
  while (u >= acc && j + 1 < components()) acc += weights_[++j];
  Vector z = rng.normal_vector(dim());
  return means_.col(j) + (variances_.col(j).array().sqrt() * z.array()).matrix();
}

double GaussianMixtureScoreModel::distance_to_support(const Vector& x) const {
  return std::sqrt((means_.colwise() - x).colwise().squaredNorm().minCoeff());
}

ProductScoreModel::ProductScoreModel(std::vector<std::shared_ptr<const ScoreModel>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("product model needs at least one block");
  for (const auto& b : blocks_) {
    if (!b) throw std::invalid_argument("product model block is null");
    dim_ += b->dim();
  }
}

Vector ProductScoreModel::score(const Vector& x, double alpha) const {
  Vector out(dim_);
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    out.segment(offset, b->dim()) = b->score(x.segment(offset, b->dim()), alpha);
    offset += b->dim();
  }
  return out;
}

double ProductScoreModel::log_density(const Vector& x, double alpha) const {
  double total = 0.0;
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    total += b->log_density(x.segment(offset, b->dim()), alpha);
    offset += b->dim();
  }
  return total;
}

Vector ProductScoreModel::sample(Rng& rng) const {
  Vector out(dim_);
  Eigen::Index offset = 0;
  for (const auto& b : blocks_) {
    out.segment(offset, b->dim()) = b->sample(rng);
    offset += b->dim();
  }
  return out;
}

GaussianMixtureScoreModel fit_kde(const VectorSet& samples, const Vector& bandwidth) {
  if (samples.empty()) throw std::invalid_argument("fit_kde: empty sample set");
  if (!(bandwidth.array() > 0.0).all()) throw std::invalid_argument("fit_kde: bandwidth must be > 0");
  const std::size_t m = samples.size();
  std::vector<double> weights(m, 1.0 / static_cast<double>(m));
  VectorSet variances(m, bandwidth.array().square().matrix());
  return GaussianMixtureScoreModel(std::move(weights), samples, std::move(variances));
}

GaussianMixtureScoreModel fit_kde(const VectorSet& samples, double bandwidth) {
  if (samples.empty()) throw std::invalid_argument("fit_kde: empty sample set");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("fit_kde: bandwidth must be > 0");
  return fit_kde(samples, Vector::Constant(samples.front().size(), bandwidth));
}

GaussianMixtureScoreModel fit_kde_auto(const VectorSet& samples, double fraction,
                                       double min_bandwidth) {
  if (samples.empty()) throw std::invalid_argument("fit_kde: empty sample set");
  Vector lo = samples.front();
  Vector hi = samples.front();
  for (const auto& s : samples) {
    lo = lo.cwiseMin(s);
    hi = hi.cwiseMax(s);
  }
  Vector bw = (fraction * (hi - lo)).cwiseMax(min_bandwidth);
  return fit_kde(samples, bw);
}

void write_gmm(std::ostream& out, const GaussianMixtureScoreModel& model) {
  const auto m = model.components();
  const auto d = model.dim();
  out << m << ' ' << d << '\n' << std::setprecision(17);
  for (Eigen::Index j = 0; j < m; ++j) out << (j ? " " : "") << model.weights()[j];
  out << '\n';
  for (const Eigen::MatrixXd* block : {&model.means(), &model.variances()}) {
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index r = 0; r < d; ++r) out << (r ? " " : "") << (*block)(r, j);
      out << '\n';
    }
  }
}

GaussianMixtureScoreModel read_gmm(std::istream& in) {
  long long m = 0;
  long long d = 0;
  if (!(in >> m >> d) || m < 1 || d < 1) throw std::runtime_error("read_gmm: bad header");
  std::vector<double> weights(static_cast<std::size_t>(m));
  for (auto& w : weights) {
    if (!(in >> w)) throw std::runtime_error("read_gmm: truncated weights");
  }
  auto read_block = [&](const char* what) {
    VectorSet rows(static_cast<std::size_t>(m), Vector(d));
    for (auto& row : rows) {
      for (long long r = 0; r < d; ++r) {
        if (!(in >> row[r])) throw std::runtime_error(std::string("read_gmm: truncated ") + what);
      }
    }
    return rows;
  };
  VectorSet means = read_block("means");
  VectorSet variances = read_block("variances");
  return GaussianMixtureScoreModel(std::move(weights), std::move(means), std::move(variances));
}

Vector reverse_chain(const ScoreModel& model, const NoiseSchedule& schedule, int start_level,
                     const Vector& xi, const StochasticityPolicy& sigma_policy, Rng& rng) {
  if (start_level < 0 || start_level > schedule.steps()) {
    throw std::invalid_argument("reverse_chain: start level out of range");
  }
  if (xi.size() != model.dim()) throw std::invalid_argument("reverse_chain: dimension mismatch");
  Vector x = xi;
  for (int i = start_level; i >= 1; --i) {
    const double a_i = schedule.alpha(i);
    const Vector s = model.score(x, a_i);
    x = reverse_step(x, s, a_i, schedule.alpha(i - 1), sigma_policy.sigma(schedule, i), rng);
  }
  return x;
}

std::string_view to_string(CleanEstimateMode mode) {
  switch (mode) {
    case CleanEstimateMode::noisy:
      return "noisy";
    case CleanEstimateMode::tweedie_only:
      return "tweedie_only";
    case CleanEstimateMode::u_step:
      return "u_step";
    case CleanEstimateMode::full:
      return "full";
  }
  return "full";
}

CleanEstimateMode parse_clean_mode(std::string_view name) {
  if (name == "noisy") return CleanEstimateMode::noisy;
  if (name == "tweedie_only") return CleanEstimateMode::tweedie_only;
  if (name == "u_step") return CleanEstimateMode::u_step;
  if (name == "full") return CleanEstimateMode::full;
  throw std::invalid_argument("unknown clean-estimate mode '" + std::string(name) + "'");
}

void CleanEstimateConfig::validate() const {
  if (u < 0) throw std::invalid_argument("clean estimate: u must be >= 0");
  if (mode == CleanEstimateMode::u_step && u < 1) {
    throw std::invalid_argument("clean estimate: u_step mode needs u >= 1");
  }
}

CleanEstimateConfig CleanEstimateConfig::from_u(int u) {
  if (u < 0) throw std::invalid_argument("clean estimate: u must be >= 0");
  if (u == 0) return {CleanEstimateMode::tweedie_only, 0};
  return {CleanEstimateMode::u_step, u};
}

Vector estimate_clean(const ScoreModel& model, const NoiseSchedule& schedule, int i,
                      const Vector& xi, const CleanEstimateConfig& cfg,
                      const StochasticityPolicy& sigma_policy, Rng& rng) {
  if (i < 1) throw std::invalid_argument("estimate_clean: level must be >= 1");
  switch (cfg.mode) {
    case CleanEstimateMode::noisy:
      return xi;
    case CleanEstimateMode::tweedie_only: {
      const double a = schedule.alpha(i);
      return tweedie_estimate(xi, model.score(xi, a), a);
    }
    case CleanEstimateMode::u_step: {
      Vector x = xi;
      const int reached = i - std::min(cfg.u, i);
      for (int l = i; l > reached; --l) {
        const double a_l = schedule.alpha(l);
        x = reverse_step(x, model.score(x, a_l), a_l, schedule.alpha(l - 1),
                         sigma_policy.sigma(schedule, l), rng);
      }
      if (reached == 0) return x;
      const double a = schedule.alpha(reached);
      return tweedie_estimate(x, model.score(x, a), a);
    }
    case CleanEstimateMode::full:
      return reverse_chain(model, schedule, i, xi, sigma_policy, rng);
  }
  return xi;
}

}  // namespace jm2d
