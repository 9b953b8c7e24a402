#pragma once

// Run configuration (key = value text), checkpoints, learning-curve CSV and
// metrics JSON.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "odpp/error.hpp"
#include "odpp/eval.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/linalg.hpp"
#include "odpp/policy.hpp"
#include "odpp/spectral.hpp"
#include "odpp/trainer.hpp"

namespace odpp::io {

struct RunConfig {
  grid::MazeParams maze;
  std::string maze_file;  // optional grid text; overrides the builder when set
  int goal_row = -1;      // goal for the selector task; -1 picks the default cell
  int goal_col = -1;
  option::OptionConfig train;
  int eval_trajectories = 10;
  std::uint64_t eval_seed = 0;
  option::SelectorConfig selector;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::parse_error, "config: bad value '" + v + "' for " + key);
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  fail(ErrorCode::parse_error, "config: bad boolean '" + v + "' for " + key);
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<std::pair<std::string, Field>>& fields() {
  using C = RunConfig;
  auto i = [](auto get_ref) {
    return Field{[get_ref](C& c, const std::string& v) {
                   auto& ref = get_ref(c);
                   ref = parse_number<std::remove_cvref_t<decltype(ref)>>("", v);
                 },
                 [get_ref](const C& c) { return std::to_string(get_ref(c)); }};
  };
  auto d = [](auto get_ref) {
    return Field{[get_ref](C& c, const std::string& v) { get_ref(c) = parse_number<double>("", v); },
                 [get_ref](const C& c) { return fmt(get_ref(c)); }};
  };
  auto b = [](auto get_ref) {
    return Field{[get_ref](C& c, const std::string& v) { get_ref(c) = parse_bool("", v); },
                 [get_ref](const C& c) { return std::string(get_ref(c) ? "true" : "false"); }};
  };
  static const std::vector<std::pair<std::string, Field>> table{
      {"maze.kind",
       {[](C& c, const std::string& v) {
          if (v == "four_room") c.maze.kind = grid::MazeKind::four_room;
          else if (v == "corridor") c.maze.kind = grid::MazeKind::corridor;
          else fail(ErrorCode::parse_error, "config: maze.kind must be four_room or corridor");
        },
        [](const C& c) { return std::string(c.maze.kind == grid::MazeKind::four_room ? "four_room" : "corridor"); }}},
      {"maze.width", i([](auto& c) -> auto& { return c.maze.width; })},
      {"maze.height", i([](auto& c) -> auto& { return c.maze.height; })},
      {"maze.length", i([](auto& c) -> auto& { return c.maze.length; })},
      {"maze.chambers", i([](auto& c) -> auto& { return c.maze.chambers; })},
      {"maze.chamber_size", i([](auto& c) -> auto& { return c.maze.chamber_size; })},
      {"maze.file", {[](C& c, const std::string& v) { c.maze_file = v; }, [](const C& c) { return c.maze_file; }}},
      {"maze.goal_row", i([](auto& c) -> auto& { return c.goal_row; })},
      {"maze.goal_col", i([](auto& c) -> auto& { return c.goal_col; })},
      {"train.options", i([](auto& c) -> auto& { return c.train.options; })},
      {"train.horizon", i([](auto& c) -> auto& { return c.train.horizon; })},
      {"train.per_pair", i([](auto& c) -> auto& { return c.train.per_pair; })},
      {"train.trajectories_per_iteration", i([](auto& c) -> auto& { return c.train.trajectories_per_iteration; })},
      {"train.landmarks", i([](auto& c) -> auto& { return c.train.landmarks; })},
      {"train.feature_dim", i([](auto& c) -> auto& { return c.train.feature_dim; })},
      {"train.beta", d([](auto& c) -> auto& { return c.train.beta; })},
      {"train.alpha1", d([](auto& c) -> auto& { return c.train.alpha1; })},
      {"train.alpha2", d([](auto& c) -> auto& { return c.train.alpha2; })},
      {"train.alpha3", d([](auto& c) -> auto& { return c.train.alpha3; })},
      {"train.lr_prior", d([](auto& c) -> auto& { return c.train.lr_prior; })},
      {"train.lr_policy", d([](auto& c) -> auto& { return c.train.lr_policy; })},
      {"train.lr_decoder", d([](auto& c) -> auto& { return c.train.lr_decoder; })},
      {"train.decoder_steps", i([](auto& c) -> auto& { return c.train.decoder_steps; })},
      {"train.iterations", i([](auto& c) -> auto& { return c.train.iterations; })},
      {"train.seed", i([](auto& c) -> auto& { return c.train.seed; })},
      {"train.normalize_advantages", b([](auto& c) -> auto& { return c.train.normalize_advantages; })},
      {"train.spectrum_period", i([](auto& c) -> auto& { return c.train.spectrum_period; })},
      {"train.ablation",
       {[](C& c, const std::string& v) { c.train.ablation = option::parse_ablation(v); },
        [](const C& c) { return option::to_string(c.train.ablation); }}},
      {"eval.trajectories_per_option", i([](auto& c) -> auto& { return c.eval_trajectories; })},
      {"eval.seed", i([](auto& c) -> auto& { return c.eval_seed; })},
      {"selector.iterations", i([](auto& c) -> auto& { return c.selector.iterations; })},
      {"selector.episodes", i([](auto& c) -> auto& { return c.selector.episodes; })},
      {"selector.max_decisions", i([](auto& c) -> auto& { return c.selector.max_decisions; })},
      {"selector.option_horizon", i([](auto& c) -> auto& { return c.selector.option_horizon; })},
      {"selector.lr", d([](auto& c) -> auto& { return c.selector.lr; })},
      {"selector.goal_reward", d([](auto& c) -> auto& { return c.selector.goal_reward; })},
      {"selector.step_penalty", d([](auto& c) -> auto& { return c.selector.step_penalty; })},
      {"selector.threshold", d([](auto& c) -> auto& { return c.selector.threshold; })},
      {"selector.init_from_prior", b([](auto& c) -> auto& { return c.selector.init_from_prior; })},
      {"selector.seed", i([](auto& c) -> auto& { return c.selector.seed; })},
  };
  return table;
}

}  // namespace detail

/// Applies one `key = value` assignment.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : detail::fields()) {
    if (name != key) continue;
    try {
      field.set(cfg, value);
    } catch (const Error& e) {
      fail(e.code(), "config: bad value '" + value + "' for " + key);
    }
    return;
  }
  fail(ErrorCode::parse_error, "config: unknown key '" + key + "'");
}

/// Lines of `key = value`; blank lines and text after '#' are ignored.
inline RunConfig parse_config(std::istream& is, RunConfig cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::parse_error, "config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read config '" + path + "'");
  return parse_config(in);
}

/// Every key in a fixed order; parse_config(format_config(c)) reproduces c.
inline std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : detail::fields()) out += name + " = " + field.get(cfg) + "\n";
  return out;
}

inline std::uint64_t config_hash(const RunConfig& cfg) { return detail::fnv1a(format_config(cfg)); }

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// Layout from maze.file when set, otherwise from the builder parameters.
inline grid::MazeSpec resolve_maze(const RunConfig& cfg) {
  if (cfg.maze_file.empty()) return grid::build_maze(cfg.maze);
  std::ifstream in(cfg.maze_file);
  if (!in) fail(ErrorCode::io_error, "cannot read maze file '" + cfg.maze_file + "'");
  return grid::parse_maze(in);
}

/// The maze with the selector goal applied: the configured cell, an existing
/// 'G' mark, or the free cell farthest (by BFS) from the first start.
inline grid::MazeSpec goal_maze(const RunConfig& cfg) {
  const auto maze = resolve_maze(cfg);
  if (cfg.goal_row >= 0 || cfg.goal_col >= 0) return maze.with_goals({{cfg.goal_row, cfg.goal_col}});
  if (!maze.goals().empty()) return maze;
  std::vector<int> dist(static_cast<std::size_t>(maze.state_count()), -1);
  std::vector<int> queue{maze.starts().front()};
  dist[static_cast<std::size_t>(queue.front())] = 0;
  int far = queue.front();
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int s = queue[head];
    if (dist[static_cast<std::size_t>(s)] > dist[static_cast<std::size_t>(far)]) far = s;
    for (int a = 0; a < grid::kActionCount; ++a) {
      const int t = grid::step(maze, s, a);
      if (dist[static_cast<std::size_t>(t)] < 0) {
        dist[static_cast<std::size_t>(t)] = dist[static_cast<std::size_t>(s)] + 1;
        queue.push_back(t);
      }
    }
  }
  return maze.with_goals({maze.cell(far)});
}

// ---------------------------------------------------------------------------
// Checkpoints.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  grid::MazeSpec maze;
  std::uint64_t spectrum_hash = 0;
  option::OptionPolicySet policies;
  Matrix features;  // unit state features the policies were trained against
};

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  os << "odpp-checkpoint " << kCheckpointVersion << "\n";
  const std::string cfg = format_config(ck.config);
  const std::string maze = grid::format_maze(ck.maze);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  os << "config " << lines(cfg) << "\n" << cfg;
  os << "maze " << lines(maze) << "\n" << maze;
  os << "spectrum_hash " << hex64(ck.spectrum_hash) << "\n";
  os << "shape " << ck.policies.states() << ' ' << ck.policies.options() << ' ' << ck.policies.feature_dim() << "\n";
  const std::pair<const char*, const Matrix*> tables[] = {{"prior", &ck.policies.prior},
                                                          {"policy", &ck.policies.policy},
                                                          {"decoder", &ck.policies.decoder},
                                                          {"selector", &ck.policies.selector},
                                                          {"features", &ck.features}};
  for (const auto& [name, m] : tables) {
    os << name << ' ';
    write_matrix(os, *m);
  }
}

namespace detail {

inline std::string expect_line(std::istream& is, const std::string& what) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorCode::parse_error, "checkpoint truncated before " + what);
  return line;
}

inline std::string read_block(std::istream& is, const std::string& tag) {
  std::istringstream head(expect_line(is, tag));
  std::string got;
  long count = -1;
  if (!(head >> got >> count) || got != tag || count < 0) fail(ErrorCode::parse_error, "checkpoint: expected " + tag);
  std::string out;
  for (long i = 0; i < count; ++i) out += expect_line(is, tag) + "\n";
  return out;
}

inline Matrix read_table(std::istream& is, const std::string& tag, Eigen::Index rows, Eigen::Index cols) {
  std::string got;
  if (!(is >> got) || got != tag) fail(ErrorCode::parse_error, "checkpoint: expected table " + tag);
  Matrix m = read_matrix(is);
  if (m.rows() != rows || m.cols() != cols) fail(ErrorCode::incompatible, "checkpoint table " + tag + " has wrong shape");
  return m;
}

}  // namespace detail

/// Reads a checkpoint. When `expected` is given the stored maze must equal
/// it. The stored spectrum hash must match the spectrum recomputed from the
/// stored maze and feature dimension.
inline Checkpoint read_checkpoint(std::istream& is, const grid::MazeSpec* expected = nullptr) {
  std::string tag;
  int version = 0;
  {
    std::istringstream head(detail::expect_line(is, "header"));
    if (!(head >> tag >> version) || tag != "odpp-checkpoint") fail(ErrorCode::parse_error, "not an odpp checkpoint");
  }
  if (version != kCheckpointVersion)
    fail(ErrorCode::incompatible, "checkpoint version " + std::to_string(version) + " is not supported");
  Checkpoint ck;
  ck.config = parse_config(detail::read_block(is, "config"));
  ck.maze = grid::parse_maze(detail::read_block(is, "maze"));
  if (expected != nullptr && !(ck.maze == *expected))
    fail(ErrorCode::incompatible, "checkpoint maze differs from the requested maze");
  {
    std::istringstream line(detail::expect_line(is, "spectrum_hash"));
    std::string key, hex;
    if (!(line >> key >> hex) || key != "spectrum_hash") fail(ErrorCode::parse_error, "checkpoint: expected spectrum_hash");
    ck.spectrum_hash = std::stoull(hex, nullptr, 16);
  }
  int states = 0, options = 0, dim = 0;
  {
    std::istringstream line(detail::expect_line(is, "shape"));
    std::string key;
    if (!(line >> key >> states >> options >> dim) || key != "shape") fail(ErrorCode::parse_error, "checkpoint: expected shape");
  }
  if (states != ck.maze.state_count()) fail(ErrorCode::incompatible, "checkpoint state count does not match its maze");
  const std::uint64_t recomputed = spectral::spectrum_hash(option::maze_spectrum(ck.maze, ck.config.train.feature_dim));
  if (recomputed != ck.spectrum_hash) fail(ErrorCode::incompatible, "checkpoint spectrum hash does not match its maze");
  ck.policies = option::OptionPolicySet(states, options, dim);
  ck.policies.prior = detail::read_table(is, "prior", states, options);
  ck.policies.policy = detail::read_table(is, "policy", static_cast<Eigen::Index>(states) * options, grid::kActionCount);
  ck.policies.decoder = detail::read_table(is, "decoder", options, states + dim);
  ck.policies.selector = detail::read_table(is, "selector", states, options);
  ck.features = detail::read_table(is, "features", states, dim);
  if (!ck.policies.all_finite()) fail(ErrorCode::non_finite, "checkpoint holds non-finite parameters");
  return ck;
}

inline Checkpoint make_checkpoint(const RunConfig& cfg, const grid::MazeSpec& maze, const option::TrainResult& res) {
  return {cfg, maze, spectral::spectrum_hash(res.spectrum), res.policies, res.features.rows()};
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write checkpoint '" + path + "'");
  write_checkpoint(out, ck);
}

inline Checkpoint load_checkpoint(const std::string& path, const grid::MazeSpec* expected = nullptr) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot read checkpoint '" + path + "'");
  return read_checkpoint(in, expected);
}

// ---------------------------------------------------------------------------
// Reports.

inline void write_reports_csv(std::ostream& os, const std::vector<option::ObjectiveReport>& reports) {
  os << "iteration,l_ib,l1,l2,l3,total,entropy,kl,p_dpp,decoder_nll\n";
  for (const auto& r : reports)
    os << r.iteration << ',' << detail::fmt(r.l_ib) << ',' << detail::fmt(r.l1) << ',' << detail::fmt(r.l2) << ','
       << detail::fmt(r.l3) << ',' << detail::fmt(r.total) << ',' << detail::fmt(r.entropy) << ','
       << detail::fmt(r.kl) << ',' << detail::fmt(r.p_dpp) << ',' << detail::fmt(r.decoder_nll) << '\n';
}

inline nlohmann::ordered_json metrics_json(const eval::MetricsReport& m) {
  nlohmann::ordered_json j;
  j["coverage"] = m.coverage;
  j["diversity"] = m.diversity;
  j["mean_distance"] = m.mean_distance;
  j["std_x"] = m.std_x;
  j["std_y"] = m.std_y;
  j["seed"] = m.seed;
  j["config_hash"] = hex64(m.config_hash);
  return j;
}

inline eval::MetricsReport metrics_from_json(const nlohmann::json& j) {
  try {
    eval::MetricsReport m;
    m.coverage = j.at("coverage").get<double>();
    m.diversity = j.at("diversity").get<double>();
    m.mean_distance = j.at("mean_distance").get<double>();
    m.std_x = j.at("std_x").get<double>();
    m.std_y = j.at("std_y").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, std::string("metrics JSON: ") + e.what());
  }
}

}  // namespace odpp::io
