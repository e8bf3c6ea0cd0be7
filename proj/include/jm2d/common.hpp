// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace jm2d {

using Vector = Eigen::VectorXd;
using VectorSet = std::vector<Vector>;

// Score evaluated at the clean endpoint (alpha == 1).
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite objective/constraint/gradient coming out of an environment.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Environment or experiment setup that cannot be run (blocked start, unreachable goal, ...).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_vector(const Vector& v);

}  // namespace jm2d
