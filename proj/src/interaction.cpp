// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace jm2d {

namespace {

void check_finite(const PotentialTerms& t, const Vector& x, const Vector& k) {
  if (!std::isfinite(t.objective) || !std::isfinite(t.constraint)) {
    throw EvaluationError("non-finite potential terms (J=" + std::to_string(t.objective) +
                          ", g=" + std::to_string(t.constraint) + ") at x=" + format_vector(x) +
                          ", k=" + format_vector(k));
  }
}

}  // namespace

InteractionPotential::InteractionPotential(PairFn terms, double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("potential temperature must be > 0");
  if (!terms) throw std::invalid_argument("potential needs a terms function");
  bind_ = [terms = std::move(terms)](const Vector& x) -> BoundFn {
    return [terms, x](const Vector& k) { return terms(x, k); };
  };
}

InteractionPotential InteractionPotential::from_binder(BindFn bind, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("potential temperature must be > 0");
  if (!bind) throw std::invalid_argument("potential needs a binder");
  InteractionPotential p;
  p.bind_ = std::move(bind);
  p.lambda_ = lambda;
  return p;
}

PotentialTerms InteractionPotential::terms(const Vector& x, const Vector& k) const {
  return bind_(x)(k);
}

InteractionPotential::BoundFn InteractionPotential::bind(const Vector& x) const { return bind_(x); }

double InteractionPotential::weight(const PotentialTerms& t, const Vector& x,
                                    const Vector& k) const {
  check_finite(t, x, k);
  if (t.constraint > 0.0) return 0.0;
  return std::exp(-t.objective / lambda_);
}

bool InteractionPotential::admissible(const PotentialTerms& t, const Vector& x,
                                      const Vector& k) const {
  check_finite(t, x, k);
  return t.constraint <= 0.0;
}

double InteractionPotential::evaluate(const Vector& x, const Vector& k) const {
  return weight(terms(x, k), x, k);
}

double evaluate_potential(const InteractionPotential& potential, const Vector& x0,
                          const Vector& k0) {
  return potential.evaluate(x0, k0);
}

StatePotential::StatePotential(TermsFn terms, double lambda)
    : terms_(std::move(terms)), lambda_(lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("potential temperature must be > 0");
  if (!terms_) throw std::invalid_argument("potential needs a terms function");
}

StatePotential StatePotential::bind_k(const InteractionPotential& potential, const Vector& k) {
  return StatePotential([potential, k](const Vector& x) { return potential.terms(x, k); },
                        potential.lambda());
}

StatePotential StatePotential::uniform() {
  return StatePotential([](const Vector&) { return PotentialTerms{0.0, -1.0}; }, 1.0);
}

double StatePotential::evaluate(const Vector& x) const { return weight(terms_(x), x); }

double StatePotential::weight(const PotentialTerms& t, const Vector& x) const {
  check_finite(t, x, Vector());
  if (t.constraint > 0.0) return 0.0;
  return std::exp(-t.objective / lambda_);
}

bool StatePotential::admissible(const PotentialTerms& t, const Vector& x) const {
  check_finite(t, x, Vector());
  return t.constraint <= 0.0;
}

ModelBasedPrior::ModelBasedPrior(PriorKind kind, Vector a, Vector b)
    : kind_(kind), a_(std::move(a)), b_(std::move(b)) {}

ModelBasedPrior ModelBasedPrior::uniform_box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("uniform prior: bound dimensions differ");
  }
  if (!(lower.array() < upper.array()).all()) {
    throw std::invalid_argument("uniform prior: lower must be < upper in every dimension");
  }
  ModelBasedPrior p(PriorKind::uniform_box, std::move(lower), std::move(upper));
  p.box_density_ = 1.0 / (p.b_ - p.a_).prod();
  return p;
}

ModelBasedPrior ModelBasedPrior::gaussian(Vector mean, Vector variance) {
  if (mean.size() != variance.size() || mean.size() == 0) {
    throw std::invalid_argument("gaussian prior: dimension mismatch");
  }
  if (!(variance.array() > 0.0).all()) throw std::invalid_argument("gaussian prior: variance <= 0");
  return ModelBasedPrior(PriorKind::gaussian, std::move(mean), std::move(variance));
}

bool ModelBasedPrior::in_support(const Vector& k) const {
  if (kind_ == PriorKind::gaussian) return true;
  return (k.array() >= a_.array()).all() && (k.array() <= b_.array()).all();
}

double ModelBasedPrior::density(const Vector& k) const {
  if (k.size() != dim()) throw std::invalid_argument("prior density: dimension mismatch");
  if (kind_ == PriorKind::uniform_box) return in_support(k) ? box_density_ : 0.0;
  const double quad = ((k - a_).array().square() / b_.array()).sum();
  const double logdet = b_.array().log().sum();
  return std::exp(-0.5 * quad - 0.5 * logdet -
                  0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi));
}

Vector ModelBasedPrior::noisy_score(const Vector& k, double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw SingularityError("prior noisy score needs alpha in (0, 1)");
  if (k.size() != dim()) throw std::invalid_argument("prior noisy score: dimension mismatch");
  const double ra = std::sqrt(alpha);
  Vector s(dim());
  if (kind_ == PriorKind::gaussian) {
    for (Eigen::Index d = 0; d < dim(); ++d) {
      s[d] = -(k[d] - ra * a_[d]) / (alpha * b_[d] + 1.0 - alpha);
    }
    return s;
  }
  // Per dimension the noisy box marginal is proportional to Phi(u_lo) - Phi(u_hi).
  const double sd = std::sqrt(1.0 - alpha);
  for (Eigen::Index d = 0; d < dim(); ++d) {
    const double u_lo = (k[d] - ra * a_[d]) / sd;
    const double u_hi = (k[d] - ra * b_[d]) / sd;
    const double pdf_lo = std::exp(-0.5 * u_lo * u_lo);
    const double pdf_hi = std::exp(-0.5 * u_hi * u_hi);
    // Mass difference taken on the tail that avoids cancellation.
    const double mass = u_hi > 0.0 ? std::erfc(u_hi / std::numbers::sqrt2) -
                                         std::erfc(u_lo / std::numbers::sqrt2)
                                   : std::erfc(-u_lo / std::numbers::sqrt2) -
                                         std::erfc(-u_hi / std::numbers::sqrt2);
    if (mass > 1e-290) {
      s[d] = 2.0 * (pdf_lo - pdf_hi) / (std::sqrt(2.0 * std::numbers::pi) * mass * sd);
    } else {
      const double nearest = ra * std::clamp(k[d] / ra, a_[d], b_[d]);
      s[d] = -(k[d] - nearest) / (sd * sd);
    }
  }
  return s;
}

Vector ModelBasedPrior::sample(Rng& rng) const {
  Vector k(dim());
  if (kind_ == PriorKind::uniform_box) {
    for (Eigen::Index d = 0; d < dim(); ++d) k[d] = rng.uniform(a_[d], b_[d]);
  } else {
    for (Eigen::Index d = 0; d < dim(); ++d) k[d] = a_[d] + std::sqrt(b_[d]) * rng.normal();
  }
  return k;
}

double prior_density(const ModelBasedPrior& prior, const Vector& k0) { return prior.density(k0); }

PostprocessResult postprocess_optimize(const InteractionPotential& potential,
                                       const ModelBasedPrior& prior, const Vector& x0, Rng& rng,
                                       int budget) {
  if (budget < 1) throw std::invalid_argument("postprocess budget must be >= 1");
  const auto bound = potential.bind(x0);

  PostprocessResult best;
  double best_objective = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  for (int c = 0; c < budget; ++c) {
    Vector k = prior.sample(rng);
    const PotentialTerms t = bound(k);
    check_finite(t, x0, k);
    if (t.constraint <= 0.0) {
      if (!best.feasible || t.objective < best_objective) {
        best = {k, true, t};
        best_objective = t.objective;
      }
    } else if (!best.feasible && t.constraint < best_violation) {
      best = {k, false, t};
      best_violation = t.constraint;
    }
  }
  return best;
}

}  // namespace jm2d
