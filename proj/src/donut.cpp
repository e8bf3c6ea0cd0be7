// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/donut.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace jm2d {

void DonutSpec::validate() const {
  if (!(r_inner > 0.0 && r_inner < r_outer)) {
    throw std::invalid_argument("donut: need 0 < r_inner < r_outer");
  }
  if (components < 8) throw std::invalid_argument("donut: need at least 8 ring components");
  if (!(band_tolerance > 0.0)) throw std::invalid_argument("donut: band tolerance must be > 0");
}

void JointToySpec::validate() const {
  donut.validate();
  for (const Disc& d : obstacles) {
    if (!(d.radius > 0.0)) throw std::invalid_argument("joint toy: obstacle radius must be > 0");
  }
  if (!(k_lower.array() < k_upper.array()).all()) {
    throw std::invalid_argument("joint toy: k bounds must have lower < upper");
  }
  const double reach = donut.r_outer;
  if (!((k_lower.array() <= (donut.center.array() - reach)).all() &&
        (k_upper.array() >= (donut.center.array() + reach)).all())) {
    throw std::invalid_argument("joint toy: k bounds must contain the donut");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("joint toy: lambda must be > 0");
}

void CGToySpec::validate() const {
  donut.validate();
  if (!(on_ring.radius > 0.0 && in_hole.radius > 0.0)) {
    throw std::invalid_argument("cg toy: disc radii must be > 0");
  }
  const double r_on = (on_ring.center - donut.center).norm();
  if (r_on + on_ring.radius < donut.band_lower() || r_on - on_ring.radius > donut.band_upper()) {
    throw std::invalid_argument("cg toy: on-ring disc misses the annulus band");
  }
  const double r_hole = (in_hole.center - donut.center).norm();
  if (r_hole + in_hole.radius >= donut.band_lower()) {
    throw std::invalid_argument("cg toy: in-hole disc reaches the annulus band");
  }
}

GaussianMixtureScoreModel donut_prior(const DonutSpec& spec) {
  spec.validate();
  const int m = spec.components;
  const double r = spec.ring_radius();
  const double var = spec.ring_sigma() * spec.ring_sigma();
  VectorSet means;
  VectorSet variances;
  for (int j = 0; j < m; ++j) {
    const double t = 2.0 * std::numbers::pi * j / m;
    Vector mu(2);
    mu << spec.center.x() + r * std::cos(t), spec.center.y() + r * std::sin(t);
    means.push_back(mu);
    variances.push_back(Vector::Constant(2, var));
  }
  return GaussianMixtureScoreModel(std::vector<double>(static_cast<std::size_t>(m), 1.0 / m),
                                   std::move(means), std::move(variances));
}

std::shared_ptr<const ProductScoreModel> donut_joint_prior(const DonutSpec& spec) {
  auto ring = std::make_shared<const GaussianMixtureScoreModel>(donut_prior(spec));
  return std::make_shared<const ProductScoreModel>(
      std::vector<std::shared_ptr<const ScoreModel>>{ring, ring});
}

double point_segment_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                              const Eigen::Vector2d& c) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((c - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - c).norm();
}

PotentialTerms joint_toy_terms(const JointToySpec& spec, const Vector& x, const Vector& k) {
  if (x.size() != 4 || k.size() != 2) {
    throw std::invalid_argument("joint toy: expects x in R^4 and k in R^2");
  }
  const Eigen::Vector2d start = x.head<2>();
  const Eigen::Vector2d goal = x.tail<2>();
  const Eigen::Vector2d wp = k.head<2>();

  PotentialTerms t;
  t.objective = -((start - wp).norm() + (wp - goal).norm());
  double g = -std::numeric_limits<double>::infinity();
  for (const Disc& d : spec.obstacles) {
    g = std::max(g, d.radius - point_segment_distance(start, wp, d.center));
    g = std::max(g, d.radius - point_segment_distance(wp, goal, d.center));
  }
  const double box = std::max((spec.k_lower - wp).maxCoeff(), (wp - spec.k_upper).maxCoeff());
  t.constraint = std::max(g, box);
  return t;
}

InteractionPotential joint_toy_potential(const JointToySpec& spec) {
  spec.validate();
  return InteractionPotential(
      [spec](const Vector& x, const Vector& k) { return joint_toy_terms(spec, x, k); },
      spec.lambda);
}

ModelBasedPrior joint_toy_prior(const JointToySpec& spec) {
  return ModelBasedPrior::uniform_box(spec.k_lower, spec.k_upper);
}

double cg_constraint(const CGToySpec& spec, const Vector& x) {
  const Eigen::Vector2d p = x.head<2>();
  return std::min((p - spec.on_ring.center).norm() - spec.on_ring.radius,
                  (p - spec.in_hole.center).norm() - spec.in_hole.radius);
}

Vector cg_project(const CGToySpec& spec, const Vector& x) {
  if (cg_constraint(spec, x) <= 0.0) return x;
  const Eigen::Vector2d p = x.head<2>();
  Vector best = x;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Disc* d : {&spec.on_ring, &spec.in_hole}) {
    const Eigen::Vector2d off = p - d->center;
    const double n = off.norm();
    const double dist = n - d->radius;
    if (dist < best_d) {
      best_d = dist;
      // Pull slightly inside so rounding cannot leave g > 0.
      const Eigen::Vector2d q = d->center + off * ((d->radius * (1.0 - 1e-12)) / n);
      best = q;
    }
  }
  return best;
}

StatePotential cg_potential(const CGToySpec& spec) {
  spec.validate();
  return StatePotential(
      [spec](const Vector& x) { return PotentialTerms{0.0, cg_constraint(spec, x)}; }, 1.0);
}

DifferentiableCost cg_cost(const CGToySpec& spec) {
  DifferentiableCost cost;
  cost.value = [spec](const Vector& x) {
    const double g = std::max(cg_constraint(spec, x), 0.0);
    return 0.5 * g * g;
  };
  cost.gradient = [spec](const Vector& x) {
    const Eigen::Vector2d p = x.head<2>();
    const Disc& d = (p - spec.on_ring.center).norm() - spec.on_ring.radius <=
                            (p - spec.in_hole.center).norm() - spec.in_hole.radius
                        ? spec.on_ring
                        : spec.in_hole;
    const Eigen::Vector2d off = p - d.center;
    const double n = off.norm();
    const double g = n - d.radius;
    Vector grad = Vector::Zero(x.size());
    if (g > 0.0) grad.head<2>() = g * off / n;
    return grad;
  };
  return cost;
}

double constraint_alignment(const VectorSet& samples,
                            const std::function<double(const Vector&)>& constraint) {
  if (samples.empty()) throw std::invalid_argument("constraint_alignment: no samples");
  std::size_t ok = 0;
  for (const Vector& s : samples) ok += constraint(s) <= 0.0 ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(samples.size());
}

bool in_band(const DonutSpec& spec, const Vector& x) {
  const double r = (x.head<2>() - spec.center).norm();
  return r >= spec.band_lower() && r <= spec.band_upper();
}

namespace {

double directed_mean_nn(const VectorSet& from, const VectorSet& to) {
  double total = 0.0;
  for (const Vector& a : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& b : to) best = std::min(best, (a - b).squaredNorm());
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(const VectorSet& a, const VectorSet& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("chamfer_distance: empty point set");
  return 0.5 * (directed_mean_nn(a, b) + directed_mean_nn(b, a));
}

FidelityMetrics data_fidelity(const VectorSet& samples, const DonutSpec& spec,
                              const VectorSet& reference) {
  if (reference.empty()) throw std::invalid_argument("data_fidelity: empty reference set");
  if (samples.empty()) throw std::invalid_argument("data_fidelity: no samples");
  FidelityMetrics m;
  std::size_t inside = 0;
  for (const Vector& s : samples) inside += in_band(spec, s) ? 1 : 0;
  m.band_fraction = static_cast<double>(inside) / static_cast<double>(samples.size());
  m.chamfer = chamfer_distance(samples, reference);
  return m;
}

VectorSet donut_reference(const DonutSpec& spec, int count, Rng& rng) {
  const GaussianMixtureScoreModel model = donut_prior(spec);
  VectorSet out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(model.sample(rng));
  return out;
}

VectorSet constrained_reference(const CGToySpec& spec, int count, Rng& rng, int max_draws) {
  const GaussianMixtureScoreModel model = donut_prior(spec.donut);
  VectorSet out;
  out.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < max_draws && static_cast<int>(out.size()) < count; ++n) {
    Vector x = model.sample(rng);
    if (cg_constraint(spec, x) <= 0.0) out.push_back(std::move(x));
  }
  if (static_cast<int>(out.size()) < count) {
    throw ConfigurationError("constrained reference: feasible region has too little prior mass");
  }
  return out;
}

void write_sample_cloud(std::ostream& out, const VectorSet& samples,
                        const std::vector<bool>& feasible, const std::vector<bool>& in_band_flags) {
  if (feasible.size() != samples.size() || in_band_flags.size() != samples.size()) {
    throw std::invalid_argument("write_sample_cloud: flag count mismatch");
  }
  const Eigen::Index d = samples.empty() ? 0 : samples.front().size();
  for (Eigen::Index c = 0; c < d; ++c) out << 'x' << (c + 1) << ',';
  out << "feasible,in_band\n";
  char buf[32];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (Eigen::Index c = 0; c < d; ++c) {
      std::snprintf(buf, sizeof buf, "%.6g,", samples[i][c]);
      out << buf;
    }
    out << (feasible[i] ? 1 : 0) << ',' << (in_band_flags[i] ? 1 : 0) << '\n';
  }
}

}  // namespace jm2d
