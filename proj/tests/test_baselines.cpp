// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "jm2d/baselines.hpp"
#include "test_support.hpp"

using namespace jm2d;
using jm2d::test::vec;

namespace {

GaussianMixtureScoreModel blob_model() {
  return GaussianMixtureScoreModel({0.5, 0.5}, {vec({-1.0, 2.0}), vec({1.0, 2.0})},
                                   {vec({0.2, 0.2}), vec({0.2, 0.2})});
}

JM2DConfig small_config() {
  JM2DConfig cfg = JM2DConfig::with_steps(10);
  cfg.n_x = 4;
  cfg.n_k = 4;
  cfg.postprocess_budget = 64;
  return cfg;
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("zero guidance scale reproduces the unguided chain") {
    const GaussianMixtureScoreModel model = blob_model();
    const JM2DConfig cfg = small_config();
    const DifferentiableCost cost{[](const Vector& x) { return x.squaredNorm(); },
                                  [](const Vector& x) { return Vector(2.0 * x); }};
    for (int seed = 0; seed < 5; ++seed) {
      const Vector a = gradient_guided_sample(model, cost, 0.0, cfg, Rng(seed));
      const Vector b = unguided_sample(model, cfg, Rng(seed));
      CHECK((a.array() == b.array()).all());
    }
  }

  TEST_CASE("gradient guidance pulls samples toward low cost") {
    const GaussianMixtureScoreModel model = blob_model();
    const JM2DConfig cfg = small_config();
    // Cost favours the left blob.
    const DifferentiableCost cost{[](const Vector& x) { return 0.5 * (x[0] + 1.0) * (x[0] + 1.0); },
                                  [](const Vector& x) { return vec({x[0] + 1.0, 0.0}); }};
    int left_guided = 0;
    int left_plain = 0;
    for (int seed = 0; seed < 100; ++seed) {
      left_guided += gradient_guided_sample(model, cost, 2.0, cfg, Rng(seed))[0] < 0.0;
      left_plain += unguided_sample(model, cfg, Rng(seed))[0] < 0.0;
    }
    CHECK(left_guided > left_plain);
  }

  TEST_CASE("non-finite gradient raises an evaluation error") {
    const DifferentiableCost bad{[](const Vector&) { return 0.0; },
                                 [](const Vector& x) { return Vector(x * NAN); }};
    CHECK_THROWS_AS(gradient_guided_sample(blob_model(), bad, 1.0, small_config(), Rng(0)),
                    EvaluationError);
  }

  TEST_CASE("half-plane projection examples") {
    const Projection half_plane = [](const Vector& x) {
      Vector y = x;
      y[0] = std::min(y[0], 0.0);
      return y;
    };
    const Vector p = half_plane(vec({1.0, 2.0}));
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 2.0);
    for (int seed = 0; seed < 20; ++seed) {
      const Vector x = projection_guided_sample(blob_model(), half_plane, small_config(), Rng(seed));
      CHECK(x[0] <= 0.0);
    }
    CHECK_THROWS(projection_guided_sample(blob_model(), Projection(), small_config(), Rng(0)));
  }

  TEST_CASE("sequential sampler postprocesses an unguided x") {
    const GaussianMixtureScoreModel model = blob_model();
    const JM2DConfig cfg = small_config();
    const InteractionPotential pot(
        [](const Vector& x, const Vector& k) {
          return PotentialTerms{(k - x).squaredNorm(), -k[1]};
        },
        1.0);
    const ModelBasedPrior prior = ModelBasedPrior::uniform_box(vec({-3.0, -3.0}), vec({3.0, 3.0}));
    const BaselineResult r = sequential_sample(model, pot, prior, cfg, Rng(2));
    CHECK((r.x0.array() == unguided_sample(model, cfg, Rng(2)).array()).all());
    REQUIRE(r.k0.has_value());
    CHECK(r.feasible);
    CHECK((*r.k0)[1] >= 0.0);
    CHECK(r.iterations == 1);
  }

  TEST_CASE("k | x resampling follows the potential") {
    // V = exp(-k / 0.5) on [0, 1]: the resampled mean approaches the truncated exponential mean.
    const InteractionPotential pot(
        [](const Vector&, const Vector& k) { return PotentialTerms{k[0], -1.0}; }, 0.5);
    const ModelBasedPrior prior = ModelBasedPrior::uniform_box(vec({0.0}), vec({1.0}));
    Rng rng(10);
    double mean = 0.0;
    constexpr int kDraws = 4000;
    for (int n = 0; n < kDraws; ++n) mean += sample_k_given_x(pot, prior, vec({0.0}), 64, rng)[0];
    mean /= kDraws;
    const double rate = 2.0;
    const double exact = 1.0 / rate - std::exp(-rate) / (1.0 - std::exp(-rate));
    CHECK(std::abs(mean - exact) < 0.02);
  }

  TEST_CASE("k | x keeps the least violating candidate when nothing is feasible") {
    const InteractionPotential pot(
        [](const Vector&, const Vector& k) { return PotentialTerms{0.0, 5.0 - k[0]}; }, 1.0);
    const ModelBasedPrior prior = ModelBasedPrior::uniform_box(vec({0.0}), vec({1.0}));
    Rng rng(3);
    CHECK(sample_k_given_x(pot, prior, vec({0.0}), 500, rng)[0] > 0.98);
    CHECK_THROWS(sample_k_given_x(pot, prior, vec({0.0}), 0, rng));
  }

  TEST_CASE("gibbs sampler alternates and reports feasibility") {
    const GaussianMixtureScoreModel model = blob_model();
    const JM2DConfig cfg = small_config();
    const InteractionPotential pot(
        [](const Vector& x, const Vector& k) {
          return PotentialTerms{(k - x).squaredNorm(), -k[1]};
        },
        1.0);
    const ModelBasedPrior prior = ModelBasedPrior::uniform_box(vec({-3.0, -3.0}), vec({3.0, 3.0}));
    const BaselineResult a = gibbs_sample(model, pot, prior, cfg, 2, Rng(4));
    const BaselineResult b = gibbs_sample(model, pot, prior, cfg, 2, Rng(4));
    CHECK(a.iterations == 2);
    REQUIRE(a.k0.has_value());
    CHECK((a.x0.array() == b.x0.array()).all());
    CHECK(a.feasible == (pot.terms(a.x0, *a.k0).constraint <= 0.0));
    CHECK_THROWS(gibbs_sample(model, pot, prior, cfg, 0, Rng(4)));
  }

  TEST_CASE("conditional generation with a constant potential matches the joint x channel") {
    const GaussianMixtureScoreModel model = blob_model();
    const JM2DConfig cfg = small_config();
    const InteractionPotential one(
        [](const Vector&, const Vector&) { return PotentialTerms{0.0, -1.0}; }, 1.0);
    const ModelBasedPrior prior = ModelBasedPrior::gaussian(vec({0.0}), vec({1.0}));
    for (int seed = 0; seed < 4; ++seed) {
      const Vector cond = conditional_generate(model, StatePotential::uniform(), cfg, Rng(seed));
      const JM2DResult joint = jm2d_sample(model, one, prior, cfg, Rng(seed));
      CHECK((cond - joint.x0).norm() < 1e-12);
    }
  }

  TEST_CASE("conditional generation concentrates on the feasible blob") {
    const GaussianMixtureScoreModel model = blob_model();
    JM2DConfig cfg = small_config();
    cfg.n_x = 16;
    const StatePotential right(
        [](const Vector& x) { return PotentialTerms{0.0, -x[0]}; }, 1.0);
    int hits = 0;
    for (int seed = 0; seed < 40; ++seed) {
      hits += conditional_generate(model, right, cfg, Rng(seed))[0] > 0.0;
    }
    CHECK(hits >= 36);
  }
}
