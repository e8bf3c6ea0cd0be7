// Copyright (C) 2026 The JM2D Authors
// SPDX-License-Identifier: Apache-2.0

#include "jm2d/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace jm2d {

namespace {

struct ExperimentInfo {
  ExperimentKind kind;
  std::string_view name;
  std::string_view description;
  std::vector<std::string> samplers;  // accepted names, in default order
};

const std::vector<ExperimentInfo>& experiment_table() {
  static const std::vector<ExperimentInfo> table{
      {ExperimentKind::donut_joint, "donut_joint",
       "start/goal/waypoint toy: compatible-pair fraction per sampler",
       {"jm2d", "gibbs", "sequential"}},
      {ExperimentKind::donut_cg, "donut_cg",
       "feasible-region donut: alignment, band fraction and Chamfer per sampler",
       {"cg", "projection", "gradient", "unguided"}},
      {ExperimentKind::maze_sweep, "maze_sweep",
       "filtered maze rollouts over the wall-inflation grid",
       {"jm2d", "sequential", "gibbs", "unfiltered"}},
      {ExperimentKind::ablation_u, "ablation_u",
       "donut conditional generation over u-step clean estimates",
       {"cg"}},
      {ExperimentKind::ablation_nk, "ablation_nk",
       "maze intervention rate over the (N, N_K) grid",
       {"jm2d"}},
      {ExperimentKind::ablation_backup, "ablation_backup",
       "maze rollouts per backup variant",
       {"jm2d", "sequential"}},
      {ExperimentKind::oracle_suite, "oracle_suite",
       "analytic score, separable reduction and tube containment checks",
       {"oracle"}},
  };
  return table;
}

const ExperimentInfo& info(ExperimentKind kind) {
  for (const ExperimentInfo& e : experiment_table()) {
    if (e.kind == kind) return e;
  }
  throw std::invalid_argument("unknown experiment kind");
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    std::string t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError(key, "invalid number '" + text + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(key, "value must be finite");
  }
  return value;
}

int parse_positive_int(const std::string& key, const std::string& text) {
  const int v = parse_number<int>(key, text);
  if (v < 1) throw ParseError(key, "must be >= 1");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(key, "expected true or false");
}

template <typename F>
auto resolve(const std::string& key, const std::string& text, F&& parse) {
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ParseError(key, e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

// Keys are "section.name"; top-level keys have an empty section.
const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"experiment",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.experiment = resolve(k, v, [](const std::string& s) { return parse_experiment_kind(s); });
       }},
      {"samplers",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.samplers = split_list(v);
         if (c.samplers.empty()) throw ParseError(k, "empty sampler list");
       }},
      {"seeds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const std::string& s : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(k, s));
         if (c.seeds.empty()) throw ParseError(k, "seeds must be non-empty");
       }},
      {"output", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output = v; }},

      {"sampler.I",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const int steps = parse_positive_int(k, v);
         c.jm2d.x_schedule = resolve(k, v, [&](const std::string&) {
           return make_schedule(c.jm2d.x_schedule.kind(), steps);
         });
         c.jm2d.k_schedule = resolve(k, v, [&](const std::string&) {
           return make_schedule(c.jm2d.k_schedule.kind(), steps);
         });
       }},
      {"sampler.N",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.n_x = parse_positive_int(k, v);
       }},
      {"sampler.N_K",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.n_k = parse_positive_int(k, v);
       }},
      {"sampler.x_schedule",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const ScheduleKind kind = resolve(k, v, [](const std::string& s) { return parse_schedule_kind(s); });
         c.jm2d.x_schedule = resolve(k, v, [&](const std::string&) {
           return make_schedule(kind, c.jm2d.x_schedule.steps());
         });
       }},
      {"sampler.k_schedule",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const ScheduleKind kind = resolve(k, v, [](const std::string& s) { return parse_schedule_kind(s); });
         c.jm2d.k_schedule = resolve(k, v, [&](const std::string&) {
           return make_schedule(kind, c.jm2d.k_schedule.steps());
         });
       }},
      {"sampler.eta",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.sigma_policy.eta = parse_number<double>(k, v);
         resolve(k, v, [&](const std::string&) {
           c.jm2d.sigma_policy.validate();
           return 0;
         });
       }},
      {"sampler.clean_mode",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.clean_cfg.mode = resolve(k, v, [](const std::string& s) { return parse_clean_mode(s); });
       }},
      {"sampler.u",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.clean_cfg.u = parse_number<int>(k, v);
         if (c.jm2d.clean_cfg.u < 0) throw ParseError(k, "must be >= 0");
       }},
      {"sampler.paired",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.paired = parse_bool(k, v);
       }},
      {"sampler.postprocess_budget",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.jm2d.postprocess_budget = parse_positive_int(k, v);
       }},
      {"sampler.gibbs_rounds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.gibbs_rounds = parse_positive_int(k, v);
         c.episode.gibbs_rounds = c.gibbs_rounds;
       }},
      {"sampler.guidance_scale",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.guidance_scale = parse_number<double>(k, v);
         if (c.guidance_scale < 0.0) throw ParseError(k, "must be >= 0");
       }},

      {"donut.samples_per_seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.samples_per_seed = parse_positive_int(k, v);
       }},
      {"donut.reference_count",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.reference_count = parse_positive_int(k, v);
       }},
      {"donut.lambda",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.joint.lambda = parse_number<double>(k, v);
         if (!(c.joint.lambda > 0.0)) throw ParseError(k, "must be > 0");
       }},
      {"donut.band_tolerance",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const double d = parse_number<double>(k, v);
         if (d < 0.0) throw ParseError(k, "must be >= 0");
         c.joint.donut.band_tolerance = d;
         c.cg.donut.band_tolerance = d;
       }},

      {"maze.w",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.w_values.clear();
         for (const std::string& s : split_list(v)) {
           const double w = parse_number<double>(k, s);
           if (w < 0.0) throw ParseError(k, "inflation must be >= 0");
           c.w_values.push_back(w);
         }
         if (c.w_values.empty()) throw ParseError(k, "empty w grid");
       }},
      {"maze.variants",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.variants.clear();
         for (const std::string& s : split_list(v)) {
           c.variants.push_back(resolve(k, s, [](const std::string& n) { return parse_backup_variant(n); }));
         }
         if (c.variants.empty()) throw ParseError(k, "empty variant list");
       }},
      {"maze.episodes",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.episodes = parse_positive_int(k, v);
       }},
      {"maze.demos",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.demo_count = parse_positive_int(k, v);
       }},
      {"maze.demo_seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.demo_seed = parse_number<std::uint64_t>(k, v);
       }},
      {"maze.demo_skew",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.demo.skew = parse_number<double>(k, v);
       }},
      {"maze.lambda",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.episode.lambda = parse_number<double>(k, v);
         if (!(c.episode.lambda > 0.0)) throw ParseError(k, "must be > 0");
       }},
      {"maze.prior_radius",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.episode.prior.radius = parse_number<double>(k, v);
         if (!(c.episode.prior.radius > 0.0)) throw ParseError(k, "must be > 0");
       }},
      {"maze.prior_windows",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.episode.prior.max_windows = parse_positive_int(k, v);
         c.episode.prior.min_windows = std::min(c.episode.prior.min_windows, c.episode.prior.max_windows);
       }},
      {"maze.prior_bandwidth",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.episode.prior.bandwidth = parse_number<double>(k, v);
         if (!(c.episode.prior.bandwidth > 0.0)) throw ParseError(k, "must be > 0");
       }},
      {"maze.episodes_output",
       [](ExperimentConfig& c, const std::string&, const std::string& v) { c.episodes_output = v; }},

      {"ablation.u",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.u_values.clear();
         for (const std::string& s : split_list(v)) {
           const int u = parse_number<int>(k, s);
           if (u < 0) throw ParseError(k, "must be >= 0");
           c.u_values.push_back(u);
         }
         if (c.u_values.empty()) throw ParseError(k, "empty u grid");
       }},
      {"ablation.nk",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.nk_grid.clear();
         for (const std::string& s : split_list(v)) {
           const auto x = s.find('x');
           if (x == std::string::npos) throw ParseError(k, "expected NxN_K, got '" + s + "'");
           c.nk_grid.emplace_back(parse_positive_int(k, trim(s.substr(0, x))),
                                  parse_positive_int(k, trim(s.substr(x + 1))));
         }
         if (c.nk_grid.empty()) throw ParseError(k, "empty grid");
       }},
  };
  return table;
}

}  // namespace

ParseError::ParseError(const std::string& key, const std::string& message)
    : std::runtime_error("config key '" + key + "': " + message), key_(key) {}

std::string_view to_string(ExperimentKind kind) { return info(kind).name; }

std::string_view describe(ExperimentKind kind) { return info(kind).description; }

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (const ExperimentInfo& e : experiment_table()) {
    if (e.name == name) return e.kind;
  }
  throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

const std::vector<ExperimentKind>& all_experiments() {
  static const std::vector<ExperimentKind> kinds = [] {
    std::vector<ExperimentKind> out;
    for (const ExperimentInfo& e : experiment_table()) out.push_back(e.kind);
    return out;
  }();
  return kinds;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ParseError("seeds", "seeds must be non-empty");
  const std::vector<std::string>& known = info(experiment).samplers;
  for (const std::string& s : samplers) {
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw ParseError("samplers", "'" + s + "' is not a sampler of " +
                                       std::string(to_string(experiment)));
    }
  }
  try {
    jm2d.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError("sampler", e.what());
  }
  if (budget_scale <= 0.0 || !std::isfinite(budget_scale)) {
    throw ParseError("budget_scale", "must be > 0");
  }
  if (threads < 1) throw ParseError("threads", "must be >= 1");
}

void apply_experiment_defaults(ExperimentConfig& cfg) {
  if (cfg.samplers.empty()) cfg.samplers = info(cfg.experiment).samplers;
  if (cfg.seeds.empty()) {
    const bool donut = cfg.experiment == ExperimentKind::donut_joint ||
                       cfg.experiment == ExperimentKind::donut_cg ||
                       cfg.experiment == ExperimentKind::ablation_u;
    if (donut) {
      cfg.seeds = {0, 1, 2, 3, 4};
    } else {
      cfg.seeds = {0};
    }
  }
  if (cfg.w_values.empty()) {
    switch (cfg.experiment) {
      case ExperimentKind::maze_sweep:
        cfg.w_values = {0.0, 0.1, 0.2};
        break;
      default:
        cfg.w_values = {0.2};
        break;
    }
  }
  if (cfg.variants.empty()) {
    if (cfg.experiment == ExperimentKind::ablation_backup) {
      cfg.variants = {BackupVariant::high_quality, BackupVariant::x_plus_y_plus,
                      BackupVariant::x_minus_y_minus};
    } else {
      cfg.variants = {BackupVariant::high_quality};
    }
  }
  if (cfg.samples_per_seed == 0) {
    cfg.samples_per_seed = cfg.experiment == ExperimentKind::donut_joint ? 16 : 64;
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(t, "unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      static const std::array<std::string_view, 4> kSections{"sampler", "donut", "maze", "ablation"};
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ParseError(section, "unknown section");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(t, "line " + std::to_string(lineno) + " is not key = value");
    }
    const std::string name = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    const std::string key = section.empty() ? name : section + "." + name;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ParseError(key, "unknown key");
    if (!seen.insert(key).second) throw ParseError(key, "duplicate key");
    if (value.empty()) throw ParseError(key, "empty value");
    it->second(cfg, key, value);
  }
  apply_experiment_defaults(cfg);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

ExperimentConfig scaled(const ExperimentConfig& cfg, double scale) {
  ExperimentConfig out = cfg;
  out.budget_scale = scale;
  auto times = [scale](int n) { return std::max(1, static_cast<int>(std::lround(n * scale))); };
  out.episodes = times(cfg.episodes);
  // The N x N_K ablation sweeps the sample counts themselves.
  if (cfg.experiment != ExperimentKind::ablation_nk) {
    out.jm2d.n_x = times(cfg.jm2d.n_x);
    out.jm2d.n_k = times(cfg.jm2d.n_k);
  }
  return out;
}

}  // namespace jm2d
