// odpp: option discovery experiments from the command line.
//
//   odpp spectral --config run.cfg --out out/
//   odpp train    --config run.cfg --seed 3 --ablation full --out out/
//   odpp eval     --checkpoint out/checkpoint.txt --trajectories 10 --out out/
//   odpp plot     --trajectories out/trajectories.jsonl --config run.cfg --out out/plot.svg
//   odpp ablate   --config run.cfg --seed 3 --out out/
//
// Failures print one line "error: <code>: <message>" to stderr and exit 1.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "odpp/commands.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string ablation;
  std::vector<std::string> set;
};

void add_common(CLI::App* app, Common& c, bool with_ablation) {
  app->add_option("--config", c.config, "key = value run configuration");
  app->add_option("--seed", c.seed, "training seed (overrides train.seed)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--set", c.set, "extra key=value overrides, applied after --config");
  if (with_ablation) app->add_option("--ablation", c.ablation, "ib, ib+l1, full or l1");
}

odpp::io::RunConfig load(const Common& c) {
  odpp::io::RunConfig cfg = c.config.empty() ? odpp::io::RunConfig{} : odpp::io::load_config(c.config);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) odpp::fail(odpp::ErrorCode::parse_error, "--set expects key=value, got '" + kv + "'");
    odpp::io::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.train.seed = *c.seed;
  if (!c.ablation.empty()) cfg.train.ablation = odpp::option::parse_ablation(c.ablation);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Option discovery with determinantal point processes on grid mazes"};
  app.require_subcommand(1);

  Common spectral_opts, train_opts, ablate_opts, plot_opts;
  auto* spectral = app.add_subcommand("spectral", "write the Laplacian spectrum fixture of the configured maze");
  add_common(spectral, spectral_opts, false);

  auto* train = app.add_subcommand("train", "train options; writes checkpoint.txt and reports.csv");
  add_common(train, train_opts, true);

  std::string checkpoint;
  std::optional<int> eval_trajectories;
  std::optional<std::uint64_t> eval_seed;
  std::string eval_out = ".";
  auto* eval = app.add_subcommand("eval", "score a checkpoint from fresh rollouts; writes metrics.json");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--trajectories", eval_trajectories, "rollouts per option");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--out", eval_out, "output directory");

  std::string traj_file, maze_file, plot_checkpoint;
  auto* plot = app.add_subcommand("plot", "render trajectories over the maze as SVG");
  plot->add_option("--trajectories", traj_file, "trajectory JSON-lines file")->required();
  plot->add_option("--maze", maze_file, "grid text file");
  plot->add_option("--checkpoint", plot_checkpoint, "take the maze from a checkpoint");
  add_common(plot, plot_opts, false);

  auto* ablate = app.add_subcommand("ablate", "train and evaluate ib, ib+l1 and full; writes comparison.csv");
  add_common(ablate, ablate_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return 2;
  }

  try {
    namespace cmd = odpp::cmd;
    if (*spectral) {
      std::cout << cmd::spectral(load(spectral_opts), spectral_opts.out).string() << "\n";
    } else if (*train) {
      const auto out = cmd::train(load(train_opts), train_opts.out);
      std::cout << out.checkpoint.string() << "\n" << out.reports.string() << "\n";
    } else if (*eval) {
      const auto out = cmd::evaluate(checkpoint, eval_out, eval_trajectories, eval_seed);
      std::cout << out.metrics.string() << "\n";
    } else if (*plot) {
      odpp::grid::MazeSpec maze;
      if (!maze_file.empty()) maze = odpp::grid::parse_maze(cmd::read_text(maze_file));
      else if (!plot_checkpoint.empty()) maze = odpp::io::load_checkpoint(plot_checkpoint).maze;
      else maze = odpp::io::resolve_maze(load(plot_opts));
      std::filesystem::path out = plot_opts.out;
      if (out.extension() != ".svg") out /= "plot.svg";
      std::cout << cmd::plot(traj_file, maze, out).string() << "\n";
    } else if (*ablate) {
      const auto rows = cmd::ablate(load(ablate_opts), ablate_opts.out);
      std::printf("%-8s %10s %10s %10s %8s %8s\n", "ablation", "coverage", "diversity", "distance", "std_x", "std_y");
      for (const auto& r : rows)
        std::printf("%-8s %10.4f %10.4f %10.4f %8.4f %8.4f\n", odpp::option::to_string(r.ablation).c_str(),
                    r.metrics.coverage, r.metrics.diversity, r.metrics.mean_distance, r.metrics.std_x,
                    r.metrics.std_y);
    }
  } catch (const odpp::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(odpp::to_string(e.code())).c_str(), e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
