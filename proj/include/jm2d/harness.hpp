// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jm2d/config.hpp"

namespace jm2d {

struct ResultRow {
  std::string experiment;
  std::string sampler;
  std::string param_json;  // compact JSON object of the cell's environment parameters
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

bool operator<(const ResultRow& a, const ResultRow& b);

// Oracle-suite budgets, shared with the `oracle` subcommand.
struct OracleBudget {
  int score_points = 50;
  int score_levels = 5;
  int score_n_x = 4096;
  int score_n_k = 4;
  int score_steps = 200;
  double score_z = 3.0;
  double score_allowed = 0.01;
  int reduction_runs = 4;
  double reduction_tol = 1e-9;
  int tube_triples = 1000;
};

/// Runs every cell of the experiment on `cfg.threads` workers and returns the
/// rows sorted. Identical configs give identical rows for any thread count.
/// Cell failures are rethrown with the cell named in the message.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg);

/// Header plus one line per row, values with 6 significant digits.
void format_results(std::ostream& out, std::vector<ResultRow> rows);
/// Throws std::runtime_error naming `path` on I/O failure.
void emit_results(const std::vector<ResultRow>& rows, const std::string& path);

/// True when some row is a failed check (a metric ending in "_pass" with value 0).
bool any_check_failed(const std::vector<ResultRow>& rows);

/// Calls `task(i)` for i in [0, count) on `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& task);

}  // namespace jm2d
