// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <initializer_list>
#include <vector>

#include "jm2d/common.hpp"
#include "jm2d/rng.hpp"

namespace jm2d::test {

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Central finite differences of a scalar function.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                               double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    Vector a = x;
    Vector b = x;
    a[d] += h;
    b[d] -= h;
    g[d] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double mean_pairwise_distance(const VectorSet& a, const VectorSet& b) {
  double total = 0.0;
  for (const Vector& x : a) {
    for (const Vector& y : b) total += (x - y).norm();
  }
  return total / static_cast<double>(a.size() * b.size());
}

// Two-sample energy distance 2 E|X - Y| - E|X - X'| - E|Y - Y'|.
inline double energy_distance(const VectorSet& a, const VectorSet& b) {
  return 2.0 * mean_pairwise_distance(a, b) - mean_pairwise_distance(a, a) -
         mean_pairwise_distance(b, b);
}

// Brute-force nearest-neighbour Chamfer, written independently of the library.
inline double brute_chamfer(const VectorSet& a, const VectorSet& b) {
  auto directed = [](const VectorSet& p, const VectorSet& q) {
    double total = 0.0;
    for (const Vector& x : p) {
      double best = INFINITY;
      for (const Vector& y : q) best = std::min(best, (x - y).norm());
      total += best;
    }
    return total / static_cast<double>(p.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

// Spearman rank correlation without tie handling (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0;
      double equal = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) less += 1.0;
        if (v[j] == v[i]) equal += 1.0;
      }
      r[i] = less + 0.5 * (equal + 1.0);
    }
    return r;
  };
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace jm2d::test
