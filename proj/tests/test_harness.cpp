// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <vector>

#include "jm2d/harness.hpp"

using namespace jm2d;

namespace {

std::string render(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  format_results(out, rows);
  return out.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("parse defaults") {
    const ExperimentConfig cfg = parse_config("experiment = donut_cg\n");
    CHECK(cfg.experiment == ExperimentKind::donut_cg);
    CHECK(cfg.jm2d.steps() == 25);
    CHECK(cfg.jm2d.n_x == 128);
    CHECK(cfg.jm2d.n_k == 128);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
    CHECK(cfg.samplers == std::vector<std::string>{"cg", "projection", "gradient", "unguided"});
    CHECK(cfg.samples_per_seed == 64);

    const ExperimentConfig maze = parse_config("experiment = maze_sweep\n");
    CHECK(maze.w_values == std::vector<double>{0.0, 0.1, 0.2});
    CHECK(maze.episodes == 50);
    CHECK(maze.variants.size() == 1);
    CHECK(parse_config("experiment = ablation_backup").variants.size() == 3);
  }

  TEST_CASE("parse sections and values") {
    const ExperimentConfig cfg = parse_config(
        "# comment\n"
        "experiment = ablation_nk\n"
        "seeds = 3, 4\n"
        "[sampler]\n"
        "I = 10\n"
        "N = 16   # trailing comment\n"
        "N_K = 8\n"
        "x_schedule = linear\n"
        "[ablation]\n"
        "nk = 4x4, 16x8\n");
    CHECK(cfg.jm2d.steps() == 10);
    CHECK(cfg.jm2d.x_schedule.kind() == ScheduleKind::linear);
    CHECK(cfg.jm2d.n_x == 16);
    CHECK(cfg.jm2d.n_k == 8);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    REQUIRE(cfg.nk_grid.size() == 2);
    CHECK(cfg.nk_grid[1] == std::pair<int, int>{16, 8});
  }

  TEST_CASE("parse errors name the offending key") {
    auto key_of = [](const std::string& text) {
      try {
        parse_config(text);
      } catch (const ParseError& e) {
        return e.key();
      }
      return std::string("<no error>");
    };
    CHECK(key_of("experiment = donut_cg\n[sampler]\nN = 0\n") == "sampler.N");
    CHECK(key_of("experiment = donut_cg\n[sampler]\nN = 4\nN = 5\n") == "sampler.N");
    CHECK(key_of("experiment = donut_cg\nbogus_key = 1\n") == "bogus_key");
    CHECK(key_of("experiment = donut_cg\n[nowhere]\n") == "nowhere");
    CHECK(key_of("experiment = donut_cg\nseeds =\n") == "seeds");
    CHECK(key_of("experiment = donut_cg\nsamplers = jm2d\n") == "samplers");
    CHECK(key_of("experiment = donut_cg\n[sampler]\nN = 4.5\n") == "sampler.N");
    CHECK(key_of("experiment = nothing\n") == "experiment");
  }

  TEST_CASE("budget scaling") {
    ExperimentConfig cfg = parse_config("experiment = maze_sweep\n");
    const ExperimentConfig quarter = scaled(cfg, 0.25);
    CHECK(quarter.jm2d.n_x == 32);
    CHECK(quarter.episodes == 13);
    CHECK(scaled(cfg, 1e-6).episodes == 1);
    cfg = parse_config("experiment = ablation_nk\n");
    CHECK(scaled(cfg, 0.25).jm2d.n_x == 128);
  }

  TEST_CASE("result formatting") {
    CHECK(render({}) == "experiment,sampler,param_json,seed,metric,value\n");
    const std::string one =
        render({{"donut_cg", "cg", "{\"mode\":\"full\",\"u\":0}", 2, "ca", 0.123456789}});
    CHECK(one ==
          "experiment,sampler,param_json,seed,metric,value\n"
          "donut_cg,cg,\"{\"\"mode\"\":\"\"full\"\",\"\"u\"\":0}\",2,ca,0.123457\n");
    // Rows come out sorted regardless of input order.
    const std::string sorted = render({{"e", "b", "{}", 0, "m", 1.0}, {"e", "a", "{}", 0, "m", 2.0}});
    CHECK(sorted.find("e,a") < sorted.find("e,b"));
  }

  TEST_CASE("failed checks are detected") {
    CHECK_FALSE(any_check_failed({{"oracle_suite", "oracle", "{}", 0, "tube_pass", 1.0}}));
    CHECK(any_check_failed({{"oracle_suite", "oracle", "{}", 0, "tube_pass", 0.0}}));
    CHECK_FALSE(any_check_failed({{"oracle_suite", "oracle", "{}", 0, "tube_violations", 0.0}}));
  }

  TEST_CASE("parallel_for visits every index once") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }

  TEST_CASE("results do not depend on the thread count") {
    ExperimentConfig cfg = parse_config(
        "experiment = donut_cg\n"
        "seeds = 0, 1\n"
        "[sampler]\n"
        "I = 8\n"
        "N = 4\n"
        "N_K = 4\n"
        "[donut]\n"
        "samples_per_seed = 6\n"
        "reference_count = 50\n");
    cfg.threads = 1;
    const std::string serial = render(run_experiment(cfg));
    cfg.threads = 3;
    const std::string parallel = render(run_experiment(cfg));
    CHECK(serial == parallel);
    // 4 samplers x 2 seeds x 5 metrics.
    CHECK(std::count(serial.begin(), serial.end(), '\n') == 1 + 40);
  }

  TEST_CASE("maze sweep emits one row per metric and cell") {
    const ExperimentConfig cfg = parse_config(
        "experiment = maze_sweep\n"
        "[sampler]\n"
        "I = 4\n"
        "N = 2\n"
        "N_K = 2\n"
        "gibbs_rounds = 1\n"
        "postprocess_budget = 16\n"
        "[maze]\n"
        "episodes = 1\n"
        "demos = 20\n");
    const std::vector<ResultRow> rows = run_experiment(cfg);
    // 4 samplers x 3 inflation widths x 5 metrics.
    CHECK(rows.size() == 60);
    std::set<std::string> metrics;
    for (const ResultRow& r : rows) metrics.insert(r.metric);
    CHECK(metrics == std::set<std::string>{"collisions", "episodes", "intervention_rate",
                                           "safe_success", "task_horizon"});
  }
}
