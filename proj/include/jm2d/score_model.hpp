// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "jm2d/common.hpp"
#include "jm2d/diffusion.hpp"
#include "jm2d/rng.hpp"

namespace jm2d {

/// A model-free prior p(x) that knows the exact score of its noisy marginals.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Eigen::Index dim() const = 0;
  // grad_x log p_alpha(x), where p_alpha is the marginal after forward noising at level alpha.
  virtual Vector score(const Vector& x, double alpha) const = 0;
  virtual double log_density(const Vector& x, double alpha) const = 0;
  // Draw from the clean distribution.
  virtual Vector sample(Rng& rng) const = 0;
};

/// Mixture of diagonal Gaussians. The noisy marginal of component N(mu, S) at
/// level alpha is N(sqrt(alpha) mu, alpha S + (1 - alpha) I), so the score and
/// density of every level are closed form.
class GaussianMixtureScoreModel final : public ScoreModel {
 public:
  GaussianMixtureScoreModel(std::vector<double> weights, VectorSet means, VectorSet variances);

  Eigen::Index dim() const override { return means_.rows(); }
  Eigen::Index components() const { return means_.cols(); }

  Vector score(const Vector& x, double alpha) const override;
  double log_density(const Vector& x, double alpha) const override;
  Vector sample(Rng& rng) const override;

  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::MatrixXd& means() const { return means_; }
  const Eigen::MatrixXd& variances() const { return variances_; }

  // Smallest Euclidean distance from x to any component mean.
  double distance_to_support(const Vector& x) const;

 private:
  // Per-component log N(x; sqrt(alpha) mu_j, v_j) + log w_j.
  Eigen::VectorXd component_log_terms(const Vector& x, double alpha) const;

  Eigen::VectorXd weights_;
  Eigen::VectorXd log_weights_;
  Eigen::MatrixXd means_;      // d x M
  Eigen::MatrixXd variances_;  // d x M
  Eigen::VectorXd mean_sq_norms_;
  // All components share one isotropic variance (KDE fits); enables the fast path.
  bool shared_isotropic_ = false;
  double shared_variance_ = 0.0;
};

/// Independent blocks, x = [x_1; x_2; ...]. Score and density factor per block.
class ProductScoreModel final : public ScoreModel {
 public:
  explicit ProductScoreModel(std::vector<std::shared_ptr<const ScoreModel>> blocks);

  Eigen::Index dim() const override { return dim_; }
  Vector score(const Vector& x, double alpha) const override;
  double log_density(const Vector& x, double alpha) const override;
  Vector sample(Rng& rng) const override;

  const std::vector<std::shared_ptr<const ScoreModel>>& blocks() const { return blocks_; }

 private:
  std::vector<std::shared_ptr<const ScoreModel>> blocks_;
  Eigen::Index dim_ = 0;
};

/// Equal-weight mixture with one isotropic component (variance bandwidth^2) per sample.
GaussianMixtureScoreModel fit_kde(const VectorSet& samples, double bandwidth);
/// Per-dimension bandwidths (diagonal variance bandwidth_d^2).
GaussianMixtureScoreModel fit_kde(const VectorSet& samples, const Vector& bandwidth);
/// Bandwidth = fraction * (max - min) per dimension; constant dimensions fall back to `min_bandwidth`.
GaussianMixtureScoreModel fit_kde_auto(const VectorSet& samples, double fraction = 0.05,
                                       double min_bandwidth = 1e-3);

/// Plain-text model file:
///   line 1:        M d
///   line 2:        M weights
///   next M lines:  d mean entries each
///   next M lines:  d variance entries each
void write_gmm(std::ostream& out, const GaussianMixtureScoreModel& model);
GaussianMixtureScoreModel read_gmm(std::istream& in);

/// Reverse steps from `start_level` down to level 0 using the model's exact noisy score.
Vector reverse_chain(const ScoreModel& model, const NoiseSchedule& schedule, int start_level,
                     const Vector& xi, const StochasticityPolicy& sigma_policy, Rng& rng);

enum class CleanEstimateMode { noisy, tweedie_only, u_step, full };

std::string_view to_string(CleanEstimateMode mode);
CleanEstimateMode parse_clean_mode(std::string_view name);

struct CleanEstimateConfig {
  CleanEstimateMode mode = CleanEstimateMode::full;
  int u = 0;

  void validate() const;
  // u = 0 maps to the single-step Tweedie estimate, u >= 1 to u-step denoising.
  static CleanEstimateConfig from_u(int u);
};

/// Estimate of the clean sample behind `xi` at level i.
Vector estimate_clean(const ScoreModel& model, const NoiseSchedule& schedule, int i,
                      const Vector& xi, const CleanEstimateConfig& cfg,
                      const StochasticityPolicy& sigma_policy, Rng& rng);

}  // namespace jm2d
