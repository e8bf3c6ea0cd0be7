// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jm2d {

std::string_view to_string(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "linear";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "linear") return ScheduleKind::linear;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

NoiseSchedule make_schedule(ScheduleKind kind, int steps) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");

  NoiseSchedule schedule;
  schedule.kind_ = kind;
  schedule.alphas_.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  for (int i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    double a = 0.0;
    if (kind == ScheduleKind::linear) {
      a = 1.0 - t;
    } else {
      const double c = std::cos(t * std::numbers::pi / 2.0);
      a = c * c;
    }
    schedule.alphas_[static_cast<std::size_t>(i)] = std::clamp(a, kAlphaFloor, 1.0);
  }
  // alpha_0 = 1 exactly
  const double a0 = schedule.alphas_.front();
  for (double& a : schedule.alphas_) a /= a0;

  for (int i = 1; i <= steps; ++i) {
    if (!(schedule.alphas_[static_cast<std::size_t>(i)] <
          schedule.alphas_[static_cast<std::size_t>(i) - 1])) {
      throw std::invalid_argument("schedule floor collapses levels " + std::to_string(i - 1) +
                                  " and " + std::to_string(i) + "; use fewer steps");
    }
  }
  return schedule;
}

void StochasticityPolicy::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta must lie in [0, 1]");
}

double StochasticityPolicy::sigma(const NoiseSchedule& schedule, int i) const {
  if (eta == 0.0) return 0.0;
  const double a_i = schedule.alpha(i);
  const double a_prev = schedule.alpha(i - 1);
  const double ratio = std::max(0.0, (1.0 - a_prev) / (1.0 - a_i));
  const double shrink = std::max(0.0, 1.0 - a_i / a_prev);
  return eta * std::sqrt(ratio) * std::sqrt(shrink);
}

Vector forward_perturb(const Vector& x0, double alpha, const Vector& z) {
  return std::sqrt(alpha) * x0 + std::sqrt(1.0 - alpha) * z;
}

Vector forward_perturb(const Vector& x0, double alpha, Rng& rng) {
  if (alpha == 1.0) return x0;
  return forward_perturb(x0, alpha, rng.normal_vector(x0.size()));
}

Vector tweedie_score(const Vector& x0, const Vector& xi, double alpha) {
  if (alpha >= 1.0) throw SingularityError("Tweedie score is singular at alpha = 1");
  if (x0.size() != xi.size()) throw std::invalid_argument("tweedie_score: dimension mismatch");
  return -(xi - std::sqrt(alpha) * x0) / (1.0 - alpha);
}

Vector tweedie_estimate(const Vector& xi, const Vector& score, double alpha) {
  return (xi + (1.0 - alpha) * score) / std::sqrt(alpha);
}

namespace {

double correction_radicand(double alpha_prev, double sigma) {
  double r = 1.0 - alpha_prev - sigma * sigma;
  // sigma from StochasticityPolicy can overshoot by an ulp at the final level
  if (r < 0.0 && r > -1e-12) r = 0.0;
  if (r < 0.0) throw std::invalid_argument("reverse_step: 1 - alpha_prev - sigma^2 is negative");
  return r;
}

}  // namespace

Vector reverse_step(const Vector& xi, const Vector& score, double alpha_i, double alpha_prev,
                    double sigma, const Vector& z, bool mbd_style) {
  if (!(alpha_i > 0.0 && alpha_i < 1.0)) {
    throw std::invalid_argument("reverse_step: alpha_i must lie in (0, 1)");
  }
  if (mbd_style) {
    return std::sqrt(alpha_prev / alpha_i) * (xi + (1.0 - alpha_i) * score);
  }
  const double radicand = correction_radicand(alpha_prev, sigma);
  Vector out = std::sqrt(alpha_prev) * (xi + (1.0 - alpha_i) * score) / std::sqrt(alpha_i) -
               std::sqrt(radicand) * std::sqrt(1.0 - alpha_i) * score;
  if (sigma > 0.0) out += sigma * z;
  return out;
}

Vector reverse_step(const Vector& xi, const Vector& score, double alpha_i, double alpha_prev,
                    double sigma, Rng& rng, bool mbd_style) {
  if (mbd_style || sigma == 0.0) {
    return reverse_step(xi, score, alpha_i, alpha_prev, sigma, Vector(), mbd_style);
  }
  return reverse_step(xi, score, alpha_i, alpha_prev, sigma, rng.normal_vector(xi.size()),
                      mbd_style);
}

}  // namespace jm2d
