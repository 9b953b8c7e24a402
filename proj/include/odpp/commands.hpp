#pragma once

// File-level operations behind the command-line tool. Each writes its
// artifacts under an output directory and returns what it wrote.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "odpp/error.hpp"
#include "odpp/eval.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/io.hpp"
#include "odpp/spectral.hpp"
#include "odpp/svg.hpp"
#include "odpp/trainer.hpp"

namespace odpp::cmd {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) fail(ErrorCode::io_error, "cannot write '" + path.string() + "'");
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Bottom-D spectrum of the exhaustive transition graph.
inline fs::path spectral(const io::RunConfig& cfg, const fs::path& out_dir) {
  const auto maze = io::resolve_maze(cfg);
  const auto spec = option::maze_spectrum(maze, cfg.train.feature_dim);
  std::ostringstream os;
  spectral::write_spectrum(os, spec);
  const auto path = out_dir / "spectrum.txt";
  write_text(path, os.str());
  return path;
}

struct TrainOutput {
  fs::path checkpoint;
  fs::path reports;
  option::TrainResult result;
};

inline TrainOutput train(const io::RunConfig& cfg, const fs::path& out_dir) {
  const auto maze = io::resolve_maze(cfg);
  TrainOutput out;
  out.result = option::train(maze, cfg.train);
  std::ostringstream ck;
  io::write_checkpoint(ck, io::make_checkpoint(cfg, maze, out.result));
  out.checkpoint = out_dir / "checkpoint.txt";
  write_text(out.checkpoint, ck.str());
  std::ostringstream csv;
  io::write_reports_csv(csv, out.result.reports);
  out.reports = out_dir / "reports.csv";
  write_text(out.reports, csv.str());
  return out;
}

struct EvalOutput {
  fs::path metrics;
  fs::path trajectories;
  eval::MetricsReport report;
};

/// Fresh rollouts of every option from a checkpoint. `trajectories` and
/// `seed` override the values stored in the checkpoint's config.
inline EvalOutput evaluate(const fs::path& checkpoint, const fs::path& out_dir, std::optional<int> trajectories = {},
                           std::optional<std::uint64_t> seed = {}, const grid::MazeSpec* expected_maze = nullptr) {
  const auto ck = io::load_checkpoint(checkpoint.string(), expected_maze);
  eval::EvalOptions eo;
  eo.trajectories_per_option = trajectories.value_or(ck.config.eval_trajectories);
  eo.horizon = ck.config.train.horizon;
  eo.landmarks = ck.config.train.landmarks;
  eo.seed = seed.value_or(ck.config.eval_seed);
  const spectral::StateFeatureMap feats(ck.features);
  const auto recs = eval::sample_option_trajectories(ck.maze, ck.policies, eo);
  EvalOutput out;
  out.report = eval::score_trajectories(ck.maze, ck.maze.starts().front(), recs, ck.policies.options(), feats,
                                        eo.landmarks);
  out.report.seed = eo.seed;
  out.report.config_hash = io::config_hash(ck.config);
  out.metrics = out_dir / "metrics.json";
  write_text(out.metrics, io::metrics_json(out.report).dump(2) + "\n");
  std::ostringstream jl;
  grid::write_trajectories(jl, ck.maze, recs);
  out.trajectories = out_dir / "trajectories.jsonl";
  write_text(out.trajectories, jl.str());
  return out;
}

inline fs::path plot(const fs::path& trajectories, const grid::MazeSpec& maze, const fs::path& out_file) {
  std::ifstream in(trajectories);
  if (!in) fail(ErrorCode::io_error, "cannot read '" + trajectories.string() + "'");
  const auto recs = grid::read_trajectories(in, maze);
  write_text(out_file, svg::render(maze, recs));
  return out_file;
}

struct AblationRow {
  option::Ablation ablation;
  eval::MetricsReport metrics;
};

/// Trains and evaluates the ib, ib+l1 and full ladders under out_dir/<name>
/// and writes a combined comparison table.
inline std::vector<AblationRow> ablate(const io::RunConfig& cfg, const fs::path& out_dir) {
  std::vector<AblationRow> rows;
  std::string table = "ablation,coverage,diversity,mean_distance,std_x,std_y\n";
  for (auto a : {option::Ablation::ib, option::Ablation::ib_l1, option::Ablation::full}) {
    io::RunConfig c = cfg;
    c.train.ablation = a;
    const auto dir = out_dir / option::to_string(a);
    const auto trained = train(c, dir);
    const auto ev = evaluate(trained.checkpoint, dir);
    rows.push_back({a, ev.report});
    const auto& m = ev.report;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f\n", option::to_string(a).c_str(), m.coverage,
                  m.diversity, m.mean_distance, m.std_x, m.std_y);
    table += buf;
  }
  write_text(out_dir / "comparison.csv", table);
  return rows;
}

}  // namespace odpp::cmd
