// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jm2d/donut.hpp"
#include "jm2d/maze.hpp"
#include "jm2d/sampler.hpp"

namespace jm2d {

enum class ExperimentKind {
  donut_joint,
  donut_cg,
  maze_sweep,
  ablation_u,
  ablation_nk,
  ablation_backup,
  oracle_suite,
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);
const std::vector<ExperimentKind>& all_experiments();
std::string_view describe(ExperimentKind kind);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::oracle_suite;
  std::vector<std::string> samplers;
  std::vector<std::uint64_t> seeds;  // empty = experiment default
  std::string output;

  // [sampler]
  JM2DConfig jm2d;
  int gibbs_rounds = kDefaultGibbsRounds;
  double guidance_scale = kDefaultGuidanceScale;

  // [donut]
  JointToySpec joint;
  CGToySpec cg;
  int samples_per_seed = 0;  // 0 = experiment default
  int reference_count = 1000;

  // [maze]
  MazeSpec maze = MazeSpec::default_maze();
  std::vector<double> w_values;
  std::vector<BackupVariant> variants;
  int episodes = 50;
  int demo_count = 200;
  std::uint64_t demo_seed = 7;
  std::string episodes_output;
  DemoOptions demo;
  EpisodeOptions episode;

  // [ablation]
  std::vector<int> u_values{0, 1, 2, 5, 10};
  std::vector<std::pair<int, int>> nk_grid{{4, 4}, {16, 16}, {64, 64}, {128, 128}};

  // Run-time settings, not part of the document.
  double budget_scale = 1.0;
  int threads = 1;

  void validate() const;
};

/// Line-oriented document:
///
///   # comment
///   key = value
///   [section]
///   key = value, value, ...
///
/// Top-level keys: experiment, samplers, seeds, output. Sections: [sampler],
/// [donut], [maze], [ablation]. Absent keys keep their defaults. Unknown or
/// repeated keys and invalid values throw ParseError naming the key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Experiment defaults for samplers, seeds, w grid, variants and sample counts
/// when the document leaves them empty.
void apply_experiment_defaults(ExperimentConfig& cfg);

/// N, N_K and episode counts multiplied by `scale`, at least 1.
ExperimentConfig scaled(const ExperimentConfig& cfg, double scale);

}  // namespace jm2d
