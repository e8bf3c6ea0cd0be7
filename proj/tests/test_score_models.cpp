// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "jm2d/score_model.hpp"
#include "test_support.hpp"

using namespace jm2d;
using jm2d::test::numeric_gradient;
using jm2d::test::vec;

namespace {

// Noisy mixture density written out component by component, no log-sum-exp tricks.
double direct_mixture_density(const GaussianMixtureScoreModel& m, const Vector& x, double alpha) {
  double total = 0.0;
  for (Eigen::Index j = 0; j < m.components(); ++j) {
    double comp = m.weights()[j];
    for (Eigen::Index d = 0; d < m.dim(); ++d) {
      const double v = alpha * m.variances()(d, j) + 1.0 - alpha;
      const double r = x[d] - std::sqrt(alpha) * m.means()(d, j);
      comp *= std::exp(-0.5 * r * r / v) / std::sqrt(2.0 * std::numbers::pi * v);
    }
    total += comp;
  }
  return total;
}

GaussianMixtureScoreModel random_mixture(Rng& rng, Eigen::Index dim, int components,
                                         bool isotropic) {
  std::vector<double> w;
  VectorSet means;
  VectorSet vars;
  double sum = 0.0;
  const double shared = rng.uniform(0.05, 1.0);
  for (int j = 0; j < components; ++j) {
    w.push_back(rng.uniform(0.1, 1.0));
    sum += w.back();
    means.push_back(rng.normal_vector(dim) * 2.0);
    Vector v(dim);
    for (Eigen::Index d = 0; d < dim; ++d) v[d] = isotropic ? shared : rng.uniform(0.05, 1.5);
    vars.push_back(v);
  }
  for (double& x : w) x /= sum;
  return GaussianMixtureScoreModel(w, means, vars);
}

}  // namespace

TEST_SUITE("score_models") {
  TEST_CASE("property: mixture score equals the finite-difference gradient of its log density") {
    Rng gen(2024);
    for (int trial = 0; trial < 60; ++trial) {
      const Eigen::Index dim = 1 + static_cast<Eigen::Index>(gen.below(3));
      const int comps = 1 + static_cast<int>(gen.below(5));
      const GaussianMixtureScoreModel m = random_mixture(gen, dim, comps, trial % 2 == 0);
      const double alpha = gen.uniform(0.02, 0.98);
      const Vector x = gen.normal_vector(dim) * 2.0;
      const Vector fd = numeric_gradient(
          [&](const Vector& y) { return std::log(direct_mixture_density(m, y, alpha)); }, x);
      const Vector s = m.score(x, alpha);
      CHECK((s - fd).lpNorm<Eigen::Infinity>() < 1e-5 * (1.0 + fd.norm()));
      CHECK(m.log_density(x, alpha) ==
            doctest::Approx(std::log(direct_mixture_density(m, x, alpha))).epsilon(1e-10));
    }
  }

  TEST_CASE("single Gaussian score at level alpha") {
    // N(1, 0.5) noised at alpha = 0.5 is N(sqrt(0.5), 0.75).
    const GaussianMixtureScoreModel m({1.0}, {vec({1.0})}, {vec({0.5})});
    const double x = 0.3;
    CHECK(m.score(vec({x}), 0.5)[0] == doctest::Approx(-(x - std::sqrt(0.5)) / 0.75));
  }

  TEST_CASE("kde examples") {
    const GaussianMixtureScoreModel kde = fit_kde({vec({-1.0}), vec({1.0})}, 0.1);
    CHECK(kde.components() == 2);
    CHECK(kde.weights()[0] == doctest::Approx(0.5));
    CHECK(kde.variances()(0, 1) == doctest::Approx(0.01));
    // Symmetric mixture: zero score at the origin for every level.
    for (double a : {0.01, 0.3, 0.9}) CHECK(kde.score(vec({0.0}), a)[0] == doctest::Approx(0.0));
    CHECK(kde.distance_to_support(vec({0.25})) == doctest::Approx(0.75));

    const GaussianMixtureScoreModel auto_bw =
        fit_kde_auto({vec({0.0, 5.0}), vec({10.0, 5.0})}, 0.05, 1e-3);
    CHECK(auto_bw.variances()(0, 0) == doctest::Approx(0.25));
    CHECK(auto_bw.variances()(1, 0) == doctest::Approx(1e-6));
    CHECK_THROWS_AS(fit_kde(VectorSet{}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(fit_kde({vec({0.0})}, 0.0), std::invalid_argument);
  }

  TEST_CASE("kde of a ring reproduces the ring") {
    Rng rng(19);
    VectorSet ring;
    for (int n = 0; n < 1000; ++n) {
      const double t = 2.0 * std::numbers::pi * rng.uniform();
      ring.push_back(vec({1.6 * std::cos(t), 1.6 * std::sin(t)}));
    }
    const GaussianMixtureScoreModel kde = fit_kde(ring, 0.05);
    VectorSet draws;
    for (int n = 0; n < 1000; ++n) draws.push_back(kde.sample(rng));
    CHECK(jm2d::test::brute_chamfer(draws, ring) < 0.1);
  }

  TEST_CASE("mixture constructor rejects malformed input") {
    CHECK_THROWS_AS(GaussianMixtureScoreModel({0.5, 0.4}, {vec({0.0}), vec({1.0})},
                                              {vec({1.0}), vec({1.0})}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixtureScoreModel({1.0}, {vec({0.0})}, {vec({-1.0})}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixtureScoreModel({}, {}, {}), std::invalid_argument);
  }

  TEST_CASE("model file round trip") {
    Rng gen(5);
    const GaussianMixtureScoreModel m = random_mixture(gen, 3, 4, false);
    std::stringstream buf;
    write_gmm(buf, m);
    const GaussianMixtureScoreModel back = read_gmm(buf);
    CHECK(back.weights() == m.weights());
    CHECK(back.means() == m.means());
    CHECK(back.variances() == m.variances());
    std::istringstream bad("2 1\n1.0\n");
    CHECK_THROWS(read_gmm(bad));
  }

  TEST_CASE("product model stacks block scores") {
    auto a = std::make_shared<GaussianMixtureScoreModel>(
        GaussianMixtureScoreModel({1.0}, {vec({1.0})}, {vec({1.0})}));
    auto b = std::make_shared<GaussianMixtureScoreModel>(
        GaussianMixtureScoreModel({1.0}, {vec({0.0, 0.0})}, {vec({1.0, 1.0})}));
    const ProductScoreModel p({a, b});
    CHECK(p.dim() == 3);
    const Vector x = vec({0.5, 1.0, -1.0});
    const Vector s = p.score(x, 0.4);
    CHECK(s[0] == doctest::Approx(a->score(vec({0.5}), 0.4)[0]));
    CHECK(s[1] == doctest::Approx(-1.0));
    CHECK(s[2] == doctest::Approx(1.0));
    CHECK(p.log_density(x, 0.4) ==
          doctest::Approx(a->log_density(vec({0.5}), 0.4) +
                          b->log_density(vec({1.0, -1.0}), 0.4)));
  }

  TEST_CASE("Tweedie clean estimate of a point mass") {
    // A point mass at 0.5 makes the single-step estimate exact at any level.
    const GaussianMixtureScoreModel m({1.0}, {vec({0.5, 0.0})}, {vec({1e-12, 1e-12})});
    const NoiseSchedule s = make_schedule(ScheduleKind::cosine, 25);
    Rng rng(0);
    const Vector est = estimate_clean(m, s, 10, vec({1.3, -0.4}),
                                      {CleanEstimateMode::tweedie_only, 0}, {1.0}, rng);
    CHECK(est[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(est[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  }

  TEST_CASE("Tweedie estimate hand value") {
    // Standard normal prior: score -x at every level, so the estimate is sqrt(alpha) x.
    const GaussianMixtureScoreModel m({1.0}, {vec({0.0, 0.0})}, {vec({1.0, 1.0})});
    const NoiseSchedule s = make_schedule(ScheduleKind::linear, 2);
    Rng rng(0);
    const Vector est =
        estimate_clean(m, s, 1, vec({1.0, 0.0}), {CleanEstimateMode::tweedie_only, 0}, {1.0}, rng);
    CHECK(est[0] == doctest::Approx(0.7071067811865476));
    CHECK(est[1] == doctest::Approx(0.0));
  }

  TEST_CASE("clean-estimate modes") {
    const GaussianMixtureScoreModel m({0.5, 0.5}, {vec({-2.0}), vec({2.0})},
                                      {vec({0.01}), vec({0.01})});
    const NoiseSchedule s = make_schedule(ScheduleKind::cosine, 25);
    const Vector xi = vec({0.7});
    Rng r1(1);
    CHECK(estimate_clean(m, s, 12, xi, {CleanEstimateMode::noisy, 0}, {1.0}, r1) == xi);

    // u_step with u >= i runs the full chain, consuming the stream identically.
    Rng ra(9);
    Rng rb(9);
    const Vector full = estimate_clean(m, s, 6, xi, {CleanEstimateMode::full, 0}, {1.0}, ra);
    const Vector u_all = estimate_clean(m, s, 6, xi, {CleanEstimateMode::u_step, 6}, {1.0}, rb);
    CHECK(full[0] == u_all[0]);

    // With eta = 0 everything is deterministic and the full chain lands on a mode.
    Rng rc(3);
    const Vector det = estimate_clean(m, s, 25, xi, {CleanEstimateMode::full, 0}, {0.0}, rc);
    CHECK(std::abs(std::abs(det[0]) - 2.0) < 0.3);

    CHECK_THROWS(CleanEstimateConfig{CleanEstimateMode::u_step, 0}.validate());
    CHECK(CleanEstimateConfig::from_u(0).mode == CleanEstimateMode::tweedie_only);
    CHECK(CleanEstimateConfig::from_u(3).u == 3);
    CHECK(parse_clean_mode("u_step") == CleanEstimateMode::u_step);
    CHECK_THROWS(parse_clean_mode("bogus"));
  }

  TEST_CASE("clean estimates sharpen as u grows") {
    // Average distance of the estimate to the nearest mode decreases from Tweedie to the full chain.
    const GaussianMixtureScoreModel m({0.5, 0.5}, {vec({-2.0, 0.0}), vec({2.0, 0.0})},
                                      {vec({0.01, 0.01}), vec({0.01, 0.01})});
    const NoiseSchedule s = make_schedule(ScheduleKind::cosine, 25);
    auto mean_error = [&](CleanEstimateConfig cfg) {
      double total = 0.0;
      for (int n = 0; n < 400; ++n) {
        Rng rng = Rng(77).split(static_cast<std::uint64_t>(n));
        const Vector xi = rng.normal_vector(2);
        Rng inner = Rng(78).split(static_cast<std::uint64_t>(n));
        total += m.distance_to_support(estimate_clean(m, s, 20, xi, cfg, {1.0}, inner));
      }
      return total / 400.0;
    };
    const double tweedie = mean_error({CleanEstimateMode::tweedie_only, 0});
    const double u5 = mean_error({CleanEstimateMode::u_step, 5});
    const double full = mean_error({CleanEstimateMode::full, 0});
    CHECK(u5 < tweedie);
    CHECK(full < u5);
  }

  TEST_CASE("reverse chain with one step matches a single reverse update") {
    const GaussianMixtureScoreModel m({1.0}, {vec({1.0})}, {vec({0.2})});
    const NoiseSchedule s = make_schedule(ScheduleKind::linear, 1);
    // I = 1 takes alpha_1 to the floor; a_prev = 1 forces sigma = 0.
    Rng rng(4);
    const Vector xi = vec({0.3});
    const Vector out = reverse_chain(m, s, 1, xi, {1.0}, rng);
    const double a = s.alpha(1);
    const Vector expected = reverse_step(xi, m.score(xi, a), a, 1.0, 0.0, Vector());
    CHECK(out[0] == doctest::Approx(expected[0]));
    CHECK(reverse_chain(m, s, 0, xi, {1.0}, rng) == xi);
    CHECK_THROWS(reverse_chain(m, s, 2, xi, {1.0}, rng));
  }

  TEST_CASE("mixture sampling follows the weights") {
    const GaussianMixtureScoreModel m({0.25, 0.75}, {vec({-5.0}), vec({5.0})},
                                      {vec({0.01}), vec({0.01})});
    Rng rng(12);
    int right = 0;
    for (int n = 0; n < 20000; ++n) right += m.sample(rng)[0] > 0.0 ? 1 : 0;
    CHECK(std::abs(right / 20000.0 - 0.75) < 0.015);
  }
}
