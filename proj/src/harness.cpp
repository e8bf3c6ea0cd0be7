// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "jm2d/baselines.hpp"
#include "jm2d/donut.hpp"
#include "jm2d/maze.hpp"
#include "jm2d/oracles.hpp"
#include "jm2d/sampler.hpp"

namespace jm2d {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDonutSampleTag = 0xD1;
constexpr std::uint64_t kReferenceTag = 0xD2;
constexpr std::uint64_t kEpisodeTag = 0xE1;

struct Task {
  std::string label;
  std::function<void()> run;
};

void run_tasks(const std::vector<Task>& tasks, int threads) {
  std::vector<std::exception_ptr> errors(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), threads, [&](int i) {
    try {
      tasks[static_cast<std::size_t>(i)].run();
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  });
  // The lowest failing index wins so the reported error does not depend on scheduling.
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error(tasks[i].label + ": " + e.what());
    }
  }
}

std::string cell_label(const ExperimentConfig& cfg, const std::string& sampler, const json& params,
                       std::uint64_t seed) {
  return std::string(to_string(cfg.experiment)) + "/" + sampler + " " + params.dump() + " seed " +
         std::to_string(seed);
}

struct RowSink {
  std::string experiment;
  std::vector<ResultRow> rows;

  void add(const std::string& sampler, const json& params, std::uint64_t seed,
           const std::string& metric, double value) {
    if (!std::isfinite(value)) {
      throw std::runtime_error(experiment + "/" + sampler + " " + params.dump() + ": metric " +
                               metric + " is not finite");
    }
    rows.push_back({experiment, sampler, params.dump(), seed, metric, value});
  }
};

// ---- donut -------------------------------------------------------------------

struct DonutDraw {
  Vector x;
  bool feasible = false;
  bool in_band = false;
};

struct DonutCell {
  std::string sampler;
  json params;
  std::uint64_t seed = 0;
  std::vector<DonutDraw> draws;
};

void emit_cg_metrics(RowSink& sink, const DonutCell& cell, const DonutSpec& spec,
                     const VectorSet& reference) {
  VectorSet xs;
  double feasible = 0.0;
  double both = 0.0;
  for (const DonutDraw& d : cell.draws) {
    xs.push_back(d.x);
    feasible += d.feasible ? 1.0 : 0.0;
    both += (d.feasible && d.in_band) ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(cell.draws.size());
  const FidelityMetrics fid = data_fidelity(xs, spec, reference);
  sink.add(cell.sampler, cell.params, cell.seed, "ca", feasible / n);
  sink.add(cell.sampler, cell.params, cell.seed, "band_fraction", fid.band_fraction);
  sink.add(cell.sampler, cell.params, cell.seed, "ood_fraction", 1.0 - fid.band_fraction);
  sink.add(cell.sampler, cell.params, cell.seed, "feasible_in_band", both / n);
  sink.add(cell.sampler, cell.params, cell.seed, "chamfer", fid.chamfer);
}

Vector draw_cg(const std::string& sampler, const GaussianMixtureScoreModel& model,
               const CGToySpec& spec, const JM2DConfig& cfg, double guidance, const Rng& rng) {
  if (sampler == "cg") return conditional_generate(model, cg_potential(spec), cfg, rng);
  if (sampler == "projection") {
    return projection_guided_sample(model, [&spec](const Vector& x) { return cg_project(spec, x); },
                                    cfg, rng);
  }
  if (sampler == "gradient") return gradient_guided_sample(model, cg_cost(spec), guidance, cfg, rng);
  if (sampler == "unguided") return unguided_sample(model, cfg, rng);
  throw std::invalid_argument("unknown donut_cg sampler '" + sampler + "'");
}

// Cells of the constrained-generation donut: one per (sampler or clean-estimate mode, seed).
// Chamfer is measured against prior draws that satisfy the constraint.
std::vector<ResultRow> run_cg_cells(const ExperimentConfig& cfg, std::vector<DonutCell> cells,
                                    const std::vector<JM2DConfig>& cell_cfg) {
  const GaussianMixtureScoreModel model = donut_prior(cfg.cg.donut);
  const int per = cfg.samples_per_seed;
  for (DonutCell& c : cells) c.draws.resize(static_cast<std::size_t>(per));

  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    DonutCell& cell = cells[c];
    const JM2DConfig& jcfg = cell_cfg[c];
    for (int s = 0; s < per; ++s) {
      tasks.push_back({cell_label(cfg, cell.sampler, cell.params, cell.seed), [&, s] {
                         const Rng rng = Rng(cell.seed).split(kDonutSampleTag, static_cast<std::uint64_t>(s));
                         DonutDraw& d = cell.draws[static_cast<std::size_t>(s)];
                         d.x = draw_cg(cell.sampler, model, cfg.cg, jcfg, cfg.guidance_scale, rng);
                         d.feasible = cg_constraint(cfg.cg, d.x) <= 0.0;
                         d.in_band = in_band(cfg.cg.donut, d.x);
                       }});
    }
  }
  run_tasks(tasks, cfg.threads);

  RowSink sink{std::string(to_string(cfg.experiment)), {}};
  std::map<std::uint64_t, VectorSet> references;
  for (const DonutCell& cell : cells) {
    auto it = references.find(cell.seed);
    if (it == references.end()) {
      Rng r = Rng(cell.seed).split(kReferenceTag);
      it = references.emplace(cell.seed, constrained_reference(cfg.cg, cfg.reference_count, r)).first;
    }
    emit_cg_metrics(sink, cell, cfg.cg.donut, it->second);
  }
  return sink.rows;
}

std::vector<ResultRow> run_donut_cg(const ExperimentConfig& cfg) {
  std::vector<DonutCell> cells;
  std::vector<JM2DConfig> cell_cfg;
  for (const std::string& sampler : cfg.samplers) {
    for (std::uint64_t seed : cfg.seeds) {
      cells.push_back({sampler, json::object(), seed, {}});
      cell_cfg.push_back(cfg.jm2d);
    }
  }
  return run_cg_cells(cfg, std::move(cells), cell_cfg);
}

std::vector<ResultRow> run_ablation_u(const ExperimentConfig& cfg) {
  std::vector<DonutCell> cells;
  std::vector<JM2DConfig> cell_cfg;
  std::vector<CleanEstimateConfig> modes;
  for (int u : cfg.u_values) modes.push_back(CleanEstimateConfig::from_u(u));
  modes.push_back({CleanEstimateMode::full, 0});
  for (const CleanEstimateConfig& mode : modes) {
    json params{{"mode", std::string(to_string(mode.mode))}};
    if (mode.mode != CleanEstimateMode::full) params["u"] = mode.u;
    JM2DConfig jcfg = cfg.jm2d;
    jcfg.clean_cfg = mode;
    for (std::uint64_t seed : cfg.seeds) {
      for (const std::string& sampler : cfg.samplers) {
        cells.push_back({sampler, params, seed, {}});
        cell_cfg.push_back(jcfg);
      }
    }
  }
  return run_cg_cells(cfg, std::move(cells), cell_cfg);
}

std::vector<ResultRow> run_donut_joint(const ExperimentConfig& cfg) {
  const auto model = donut_joint_prior(cfg.joint.donut);
  const InteractionPotential potential = joint_toy_potential(cfg.joint);
  const ModelBasedPrior prior = joint_toy_prior(cfg.joint);
  const int per = cfg.samples_per_seed;

  struct Draw {
    bool compatible = false;
    bool in_band = false;
  };
  struct Cell {
    std::string sampler;
    std::uint64_t seed;
    std::vector<Draw> draws;
  };
  std::vector<Cell> cells;
  for (const std::string& sampler : cfg.samplers) {
    for (std::uint64_t seed : cfg.seeds) {
      cells.push_back({sampler, seed, std::vector<Draw>(static_cast<std::size_t>(per))});
    }
  }
  const json params{{"lambda", cfg.joint.lambda}};
  std::vector<Task> tasks;
  for (Cell& cell : cells) {
    for (int s = 0; s < per; ++s) {
      tasks.push_back({cell_label(cfg, cell.sampler, params, cell.seed), [&, s] {
                         const Rng rng = Rng(cell.seed).split(kDonutSampleTag, static_cast<std::uint64_t>(s));
                         Vector x;
                         Vector k;
                         if (cell.sampler == "jm2d") {
                           JM2DResult r = jm2d_sample(*model, potential, prior, cfg.jm2d, rng);
                           x = std::move(r.x0);
                           k = std::move(r.k0);
                         } else {
                           BaselineResult r =
                               cell.sampler == "gibbs"
                                   ? gibbs_sample(*model, potential, prior, cfg.jm2d, cfg.gibbs_rounds, rng)
                                   : sequential_sample(*model, potential, prior, cfg.jm2d, rng);
                           x = std::move(r.x0);
                           k = std::move(*r.k0);
                         }
                         Draw& d = cell.draws[static_cast<std::size_t>(s)];
                         d.compatible = potential.terms(x, k).constraint <= 0.0;
                         d.in_band = in_band(cfg.joint.donut, x.head(2)) &&
                                     in_band(cfg.joint.donut, x.tail(2));
                       }});
    }
  }
  run_tasks(tasks, cfg.threads);

  RowSink sink{std::string(to_string(cfg.experiment)), {}};
  for (const Cell& cell : cells) {
    double compatible = 0.0;
    double band = 0.0;
    for (const Draw& d : cell.draws) {
      compatible += d.compatible ? 1.0 : 0.0;
      band += d.in_band ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(per);
    sink.add(cell.sampler, params, cell.seed, "compatible_fraction", compatible / n);
    sink.add(cell.sampler, params, cell.seed, "in_band_fraction", band / n);
  }
  return sink.rows;
}

// ---- maze --------------------------------------------------------------------

struct MazeCell {
  MazeSampler sampler;
  double w;
  BackupVariant variant;
  JM2DConfig jcfg;
  json params;
  std::uint64_t seed;
  std::vector<EpisodeMetrics> episodes;
};

std::vector<ResultRow> run_maze_cells(const ExperimentConfig& cfg, std::vector<MazeCell> cells) {
  cfg.maze.validate();
  Rng demo_rng(cfg.demo_seed);
  const DemoSet demos = generate_demos(cfg.maze, cfg.demo_count, demo_rng, cfg.demo);

  std::vector<Task> tasks;
  for (MazeCell& cell : cells) {
    cell.episodes.resize(static_cast<std::size_t>(cfg.episodes));
    for (int e = 0; e < cfg.episodes; ++e) {
      tasks.push_back({cell_label(cfg, std::string(to_string(cell.sampler)), cell.params, cell.seed) +
                           " episode " + std::to_string(e),
                       [&, e] {
                         // Independent of the sampler, so samplers see matched episodes.
                         const Rng rng = Rng(cell.seed).split(kEpisodeTag, static_cast<std::uint64_t>(e));
                         cell.episodes[static_cast<std::size_t>(e)] =
                             run_episode(cfg.maze, cell.w, cell.sampler, cell.jcfg, cell.variant, demos,
                                         rng, cfg.episode);
                       }});
    }
  }
  run_tasks(tasks, cfg.threads);

  if (!cfg.episodes_output.empty()) {
    std::vector<EpisodeRecord> records;
    for (const MazeCell& cell : cells) {
      for (const EpisodeMetrics& m : cell.episodes) {
        records.push_back({cell.seed, cell.sampler, cell.w, cell.variant, m});
      }
    }
    std::ofstream f(cfg.episodes_output);
    if (!f) throw std::runtime_error("cannot write '" + cfg.episodes_output + "'");
    write_episode_csv(f, records);
    if (!f) throw std::runtime_error("write failed for '" + cfg.episodes_output + "'");
  }

  RowSink sink{std::string(to_string(cfg.experiment)), {}};
  for (const MazeCell& cell : cells) {
    double success = 0.0;
    double collisions = 0.0;
    double intervention = 0.0;
    double horizon = 0.0;
    for (const EpisodeMetrics& m : cell.episodes) {
      success += m.safe_success ? 1.0 : 0.0;
      collisions += m.collided ? 1.0 : 0.0;
      intervention += m.intervention_rate;
      horizon += m.task_horizon;
    }
    const double n = static_cast<double>(cell.episodes.size());
    const std::string name(to_string(cell.sampler));
    sink.add(name, cell.params, cell.seed, "collisions", collisions);
    sink.add(name, cell.params, cell.seed, "episodes", n);
    sink.add(name, cell.params, cell.seed, "intervention_rate", intervention / n);
    sink.add(name, cell.params, cell.seed, "safe_success", success / n);
    sink.add(name, cell.params, cell.seed, "task_horizon", horizon / n);
  }
  return sink.rows;
}

std::vector<ResultRow> run_maze(const ExperimentConfig& cfg) {
  std::vector<MazeCell> cells;
  for (const std::string& name : cfg.samplers) {
    const MazeSampler sampler = parse_maze_sampler(name);
    for (double w : cfg.w_values) {
      for (BackupVariant variant : cfg.variants) {
        if (cfg.experiment == ExperimentKind::ablation_nk) {
          for (const auto& [n, nk] : cfg.nk_grid) {
            JM2DConfig jcfg = cfg.jm2d;
            jcfg.n_x = n;
            jcfg.n_k = nk;
            const json params{{"N", n}, {"N_K", nk}, {"w", w}, {"variant", std::string(to_string(variant))}};
            for (std::uint64_t seed : cfg.seeds) cells.push_back({sampler, w, variant, jcfg, params, seed, {}});
          }
        } else {
          const json params{{"w", w}, {"variant", std::string(to_string(variant))}};
          for (std::uint64_t seed : cfg.seeds) {
            cells.push_back({sampler, w, variant, cfg.jm2d, params, seed, {}});
          }
        }
      }
    }
  }
  return run_maze_cells(cfg, std::move(cells));
}

// ---- oracles -----------------------------------------------------------------

std::vector<ResultRow> run_oracles(const ExperimentConfig& cfg) {
  const OracleBudget b;
  struct Out {
    ScoreOracleReport score;
    ReductionReport reduction;
    TubeReport tube;
  };
  std::vector<Out> outs(cfg.seeds.size());
  std::vector<Task> tasks;
  const json params = json::object();
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const std::uint64_t seed = cfg.seeds[i];
    const std::string label = cell_label(cfg, "oracle", params, seed);
    tasks.push_back({label + " score", [&, i, seed] {
                       outs[i].score = score_oracle(b.score_points, b.score_levels, b.score_n_x,
                                                    b.score_n_k, b.score_steps, b.score_z,
                                                    b.score_allowed, seed);
                     }});
    tasks.push_back({label + " reduction", [&, i, seed] {
                       outs[i].reduction = reduction_oracle(b.reduction_runs, cfg.jm2d.n_x,
                                                            cfg.jm2d.n_k, b.reduction_tol, seed);
                     }});
    tasks.push_back({label + " tube", [&, i, seed] {
                       outs[i].tube = tube_soundness(b.tube_triples, seed);
                     }});
  }
  run_tasks(tasks, cfg.threads);

  RowSink sink{std::string(to_string(cfg.experiment)), {}};
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const std::uint64_t seed = cfg.seeds[i];
    const Out& o = outs[i];
    sink.add("oracle", params, seed, "score_max_z", o.score.max_abs_z);
    sink.add("oracle", params, seed, "score_exceedances", o.score.exceedances);
    sink.add("oracle", params, seed, "score_mean_z", o.score.mean_z);
    sink.add("oracle", params, seed, "score_pass", o.score.pass ? 1.0 : 0.0);
    sink.add("oracle", params, seed, "reduction_max_x_diff", o.reduction.max_x_diff);
    sink.add("oracle", params, seed, "reduction_max_k_diff", o.reduction.max_k_diff);
    sink.add("oracle", params, seed, "reduction_pass", o.reduction.pass ? 1.0 : 0.0);
    sink.add("oracle", params, seed, "tube_violations", o.tube.violations);
    sink.add("oracle", params, seed, "tube_pass", o.tube.pass ? 1.0 : 0.0);
  }
  return sink.rows;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

bool operator<(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.experiment, a.sampler, a.seed, a.metric, a.param_json) <
         std::tie(b.experiment, b.sampler, b.seed, b.metric, b.param_json);
}

void parallel_for(int count, int threads, const std::function<void(int)>& task) {
  const int workers = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
  };
  if (workers == 1) {
    loop();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) pool.emplace_back(loop);
  for (std::thread& t : pool) t.join();
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  apply_experiment_defaults(cfg);
  cfg.validate();
  std::vector<ResultRow> rows;
  switch (cfg.experiment) {
    case ExperimentKind::donut_joint:
      rows = run_donut_joint(cfg);
      break;
    case ExperimentKind::donut_cg:
      rows = run_donut_cg(cfg);
      break;
    case ExperimentKind::ablation_u:
      rows = run_ablation_u(cfg);
      break;
    case ExperimentKind::maze_sweep:
    case ExperimentKind::ablation_nk:
    case ExperimentKind::ablation_backup:
      rows = run_maze(cfg);
      break;
    case ExperimentKind::oracle_suite:
      rows = run_oracles(cfg);
      break;
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

void format_results(std::ostream& out, std::vector<ResultRow> rows) {
  std::sort(rows.begin(), rows.end());
  out << "experiment,sampler,param_json,seed,metric,value\n";
  char value[64];
  for (const ResultRow& r : rows) {
    std::snprintf(value, sizeof value, "%.6g", r.value);
    out << csv_quote(r.experiment) << ',' << csv_quote(r.sampler) << ',' << csv_quote(r.param_json)
        << ',' << r.seed << ',' << csv_quote(r.metric) << ',' << value << '\n';
  }
}

void emit_results(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  format_results(f, rows);
  f.flush();
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

bool any_check_failed(const std::vector<ResultRow>& rows) {
  return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) {
    return r.metric.size() >= 5 && r.metric.compare(r.metric.size() - 5, 5, "_pass") == 0 &&
           r.value == 0.0;
  });
}

}  // namespace jm2d
