// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "jm2d/rng.hpp"

using namespace jm2d;

TEST_SUITE("rng") {
  TEST_CASE("identical keys give identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  }

  TEST_CASE("split ignores how much the parent has drawn") {
    Rng a(9);
    Rng b(9);
    for (int i = 0; i < 17; ++i) b.uniform();
    Rng ca = a.split(3, 4, 5);
    Rng cb = b.split(3, 4, 5);
    for (int i = 0; i < 20; ++i) CHECK(ca.uniform() == cb.uniform());
  }

  TEST_CASE("split indices select distinct streams") {
    const Rng root(1);
    std::set<std::uint64_t> keys;
    for (std::uint64_t a = 0; a < 8; ++a) {
      for (std::uint64_t b = 0; b < 8; ++b) keys.insert(root.split(a, b).key());
    }
    CHECK(keys.size() == 64);
    CHECK(root.split(1, 2).key() != root.split(2, 1).key());
  }

  TEST_CASE("uniform lies in [0, 1) and normal moments are standard") {
    Rng r(5);
    double sum = 0.0;
    double sq = 0.0;
    constexpr int kN = 200000;
    for (int i = 0; i < kN; ++i) {
      const double u = r.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      const double z = r.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / kN) < 0.01);
    CHECK(std::abs(sq / kN - 1.0) < 0.02);
  }

  TEST_CASE("below stays in range and hits every value") {
    Rng r(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t v = r.below(7);
      REQUIRE(v < 7);
      seen.insert(v);
    }
    CHECK(seen.size() == 7);
  }
}
