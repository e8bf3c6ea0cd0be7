// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>
#include <vector>

#include "jm2d/common.hpp"
#include "jm2d/rng.hpp"

namespace jm2d {

enum class ScheduleKind { cosine, linear };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

inline constexpr double kAlphaFloor = 1e-5;

/// Cumulative noise levels alpha_bar_0 .. alpha_bar_I, index 0 is clean data.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;

  ScheduleKind kind() const { return kind_; }
  int steps() const { return static_cast<int>(alphas_.size()) - 1; }
  double alpha(int i) const { return alphas_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& alphas() const { return alphas_; }

 private:
  friend NoiseSchedule make_schedule(ScheduleKind kind, int steps);
  ScheduleKind kind_ = ScheduleKind::cosine;
  std::vector<double> alphas_{1.0};
};

/// Throws std::invalid_argument for steps < 1, or when the floor would make two
/// consecutive levels equal (cosine with steps beyond ~490).
NoiseSchedule make_schedule(ScheduleKind kind, int steps);

/// Per-step sigma_i = eta * sqrt((1 - a_{i-1}) / (1 - a_i)) * sqrt(1 - a_i / a_{i-1}).
/// eta = 0 gives deterministic DDIM, eta = 1 DDPM-like ancestral sampling.
struct StochasticityPolicy {
  double eta = 1.0;

  void validate() const;
  double sigma(const NoiseSchedule& schedule, int i) const;
};

/// sqrt(alpha) * x0 + sqrt(1 - alpha) * z with z drawn from `rng`.
Vector forward_perturb(const Vector& x0, double alpha, Rng& rng);
Vector forward_perturb(const Vector& x0, double alpha, const Vector& z);

/// Score of the forward kernel, -(xi - sqrt(alpha) x0) / (1 - alpha).
/// Throws SingularityError at alpha == 1.
Vector tweedie_score(const Vector& x0, const Vector& xi, double alpha);

/// Tweedie posterior-mean estimate (xi + (1 - alpha) score) / sqrt(alpha).
Vector tweedie_estimate(const Vector& xi, const Vector& score, double alpha);

/// One reverse update from level i to i-1.
///
/// Default form:
///   sqrt(a_prev) (xi + (1 - a_i) s) / sqrt(a_i) - sqrt(1 - a_prev - sigma^2) sqrt(1 - a_i) s + sigma z
/// With `mbd_style` the correction term and the noise are dropped, which is the
/// update used for the model-based channel:
///   sqrt(a_prev / a_i) (xi + (1 - a_i) s)
/// Throws std::invalid_argument when 1 - a_prev - sigma^2 < 0.
Vector reverse_step(const Vector& xi, const Vector& score, double alpha_i, double alpha_prev,
                    double sigma, Rng& rng, bool mbd_style = false);
Vector reverse_step(const Vector& xi, const Vector& score, double alpha_i, double alpha_prev,
                    double sigma, const Vector& z, bool mbd_style = false);

}  // namespace jm2d
