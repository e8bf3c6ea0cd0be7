// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "jm2d/common.hpp"

namespace jm2d {

/// Seeded random stream with deterministic splitting.
///
/// A stream is identified by a 64-bit key. `split()` derives a child key by
/// hashing the parent key with caller-supplied indices; it does not touch the
/// parent's engine state, so the child streams a parallel loop hands out are
/// independent of scheduling order and of how many values the parent has drawn.
/// The engine is a splitmix64 counter stream and normals come from the polar
/// method, so draws are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t key = 0);

  Rng split(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

  double normal();
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  std::uint64_t below(std::uint64_t n);
  Vector normal_vector(Eigen::Index n);

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t next();

  std::uint64_t key_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);

}  // namespace jm2d
