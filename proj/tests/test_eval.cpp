#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "odpp/commands.hpp"
#include "odpp/eval.hpp"
#include "odpp/io.hpp"
#include "odpp/svg.hpp"
#include "oracles.hpp"

namespace odpp {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("odpp_test_eval_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kOpenRoom =
    "#######\n"
    "#.....#\n"
    "#.....#\n"
    "#..S..#\n"
    "#.....#\n"
    "#.....#\n"
    "#######\n";

grid::TrajectoryRecord path_of(const grid::MazeSpec& m, int option, const std::vector<grid::Cell>& cells) {
  grid::TrajectoryRecord r;
  r.option = option;
  for (const auto& c : cells) r.states.push_back(m.state_at(c.row, c.col));
  for (std::size_t t = 1; t < cells.size(); ++t) {
    r.actions.push_back(0);
    r.logprobs.push_back(0.0);
  }
  return r;
}

io::RunConfig tiny_config() {
  io::RunConfig cfg;
  cfg.train.options = 3;
  cfg.train.horizon = 10;
  cfg.train.per_pair = 2;
  cfg.train.trajectories_per_iteration = 12;
  cfg.train.landmarks = 4;
  cfg.train.feature_dim = 5;
  cfg.train.iterations = 4;
  cfg.train.seed = 9;
  cfg.eval_trajectories = 3;
  return cfg;
}

// ---------------------------------------------------------------------------
// Metrics.

TEST(FinalStateStats, HandComputedThreeTrajectoryFixture) {
  const auto m = grid::parse_maze(kOpenRoom);
  const int origin = m.starts().front();
  // Finals relative to the start: (0, +2), (+2, 0), (-2, -2) with y pointing up.
  const std::vector<grid::TrajectoryRecord> recs{path_of(m, 0, {{3, 3}, {2, 3}, {1, 3}}),
                                                 path_of(m, 1, {{3, 3}, {3, 4}, {3, 5}}),
                                                 path_of(m, 2, {{3, 3}, {4, 2}, {5, 1}})};
  const auto st = eval::final_state_stats(m, origin, recs);
  EXPECT_NEAR(st.mean_distance, (2.0 + 2.0 + 2.0 * std::sqrt(2.0)) / 3.0, 1e-12);
  EXPECT_NEAR(st.std_x, std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(st.std_y, std::sqrt(8.0 / 3.0), 1e-12);
}

TEST(ScoreTrajectories, HandComputedFixtureMatchesDirectKernels) {
  const auto m = grid::parse_maze(kOpenRoom);
  const auto feats = spectral::state_features(option::maze_spectrum(m, 4));
  // Bent paths: each trajectory's three features are linearly independent,
  // so the degenerate-stop greedy keeps all of them as landmarks.
  const std::vector<grid::TrajectoryRecord> recs{path_of(m, 0, {{3, 3}, {2, 3}, {2, 4}}),
                                                 path_of(m, 1, {{3, 3}, {3, 4}, {4, 4}}),
                                                 path_of(m, 2, {{3, 3}, {4, 3}, {4, 2}})};
  const auto report = eval::score_trajectories(m, m.starts().front(), recs, 3, feats, 3);
  double coverage = 0.0;
  Matrix traj_rows(3, 4);
  for (int i = 0; i < 3; ++i) {
    const Matrix rows = feats.gather(recs[static_cast<std::size_t>(i)].states);
    const Matrix gram = rows * rows.transpose();
    ASSERT_GT(gram.determinant(), 1e-6) << i;
    coverage += oracle::brute_expected_cardinality(gram) / 3.0;
    const Vector sum = rows.colwise().sum().transpose();
    traj_rows.row(i) = (sum / sum.norm()).transpose();
  }
  EXPECT_NEAR(report.coverage, coverage, 1e-9);
  EXPECT_NEAR(report.diversity, oracle::brute_expected_cardinality(traj_rows * traj_rows.transpose()), 1e-9);
  EXPECT_NEAR(report.mean_distance, std::sqrt(2.0), 1e-12);
}

TEST(ScoreTrajectories, IdenticalTrajectoriesGiveKOverKPlusOne) {
  const auto m = grid::parse_maze(kOpenRoom);
  const auto feats = spectral::state_features(option::maze_spectrum(m, 6));
  for (int k : {1, 2, 5, 10}) {
    std::vector<grid::TrajectoryRecord> recs;
    for (int c = 0; c < k; ++c) recs.push_back(path_of(m, c, {{3, 3}, {2, 3}, {2, 4}}));
    const auto report = eval::score_trajectories(m, m.starts().front(), recs, k, feats, 3);
    EXPECT_NEAR(report.diversity, k / (k + 1.0), 1e-6) << k;
  }
}

TEST(EvaluateOptions, StationaryPolicyHasZeroDistanceAndSpread) {
  const auto m = grid::parse_maze("#####\n#S..#\n#####\n");
  option::OptionPolicySet p(m.state_count(), 2, 2);
  // Always push up into the wall.
  for (int s = 0; s < m.state_count(); ++s)
    for (int c = 0; c < 2; ++c) p.policy(p.policy_row(s, c), static_cast<int>(grid::Action::up)) = 1000.0;
  const auto feats = spectral::state_features(option::maze_spectrum(m, 2));
  eval::EvalOptions eo;
  eo.trajectories_per_option = 4;
  eo.horizon = 20;
  const auto r = eval::evaluate_options(m, p, feats, eo);
  EXPECT_EQ(r.mean_distance, 0.0);
  EXPECT_EQ(r.std_x, 0.0);
  EXPECT_EQ(r.std_y, 0.0);
  EXPECT_NEAR(r.coverage, 21.0 / 22.0, 1e-9);
}

TEST(EvaluateOptions, StraightLineDistanceIsLineLength) {
  const auto m = grid::parse_maze("##########\n#S.......#\n##########\n");
  option::OptionPolicySet p(m.state_count(), 1, 3);
  for (int s = 0; s < m.state_count(); ++s) p.policy(p.policy_row(s, 0), static_cast<int>(grid::Action::right)) = 1000.0;
  const auto feats = spectral::state_features(option::maze_spectrum(m, 3));
  eval::EvalOptions eo;
  eo.trajectories_per_option = 3;
  eo.horizon = 5;
  const auto r = eval::evaluate_options(m, p, feats, eo);
  EXPECT_EQ(r.mean_distance, 5.0);
  EXPECT_EQ(r.std_x, 0.0);
}

TEST(EvaluateOptions, MetricsRespectBoundsAndSeed) {
  const auto m = grid::build_maze({});
  const option::OptionPolicySet p(m.state_count(), 4, 8);
  const auto feats = spectral::state_features(option::maze_spectrum(m, 8));
  eval::EvalOptions eo;
  eo.seed = 5;
  const auto a = eval::evaluate_options(m, p, feats, eo);
  const auto b = eval::evaluate_options(m, p, feats, eo);
  EXPECT_EQ(a.coverage, b.coverage);
  EXPECT_EQ(a.diversity, b.diversity);
  EXPECT_GE(a.mean_distance, 0.0);
  EXPECT_GE(a.std_x, 0.0);
  EXPECT_GE(a.std_y, 0.0);
  EXPECT_GT(a.diversity, 0.0);
  EXPECT_LE(a.diversity, 4.0);
  EXPECT_THROW(eval::evaluate_options(grid::parse_maze("####\n#S.#\n####\n"), p, feats, eo), Error);
}

// ---------------------------------------------------------------------------
// Config.

TEST(Config, DefaultsCarryTrainingHyperparameters) {
  const io::RunConfig cfg;
  EXPECT_EQ(cfg.train.beta, 1e-3);
  EXPECT_EQ(cfg.train.alpha1, 1e-4);
  EXPECT_EQ(cfg.train.alpha2, 1e-2);
  EXPECT_EQ(cfg.train.alpha3, 1e-2);
  EXPECT_EQ(cfg.train.feature_dim, 30);
  EXPECT_EQ(cfg.train.horizon, 50);
  EXPECT_EQ(cfg.train.landmarks, 10);
  EXPECT_EQ(cfg.train.options, 10);
  EXPECT_EQ(cfg.train.trajectories_per_iteration, 100);
}

TEST(Config, ParseOverridesAndRoundTrips) {
  const auto cfg = io::parse_config(
      "# comment\n"
      "maze.kind = corridor   # trailing comment\n"
      "train.alpha1=0.5\n"
      "\n"
      "train.ablation = ib+l1\n"
      "train.normalize_advantages = true\n"
      "train.seed = 18446744073709551615\n");
  EXPECT_EQ(cfg.maze.kind, grid::MazeKind::corridor);
  EXPECT_EQ(cfg.train.alpha1, 0.5);
  EXPECT_EQ(cfg.train.ablation, option::Ablation::ib_l1);
  EXPECT_TRUE(cfg.train.normalize_advantages);
  EXPECT_EQ(cfg.train.seed, 18446744073709551615ULL);
  const auto again = io::parse_config(io::format_config(cfg));
  EXPECT_EQ(io::format_config(again), io::format_config(cfg));
  EXPECT_EQ(io::config_hash(again), io::config_hash(cfg));
  EXPECT_NE(io::config_hash(cfg), io::config_hash(io::RunConfig{}));
}

TEST(Config, MalformedInputReportsParseError) {
  for (const char* text : {"train.options = ten\n", "no_equals_sign\n", "train.unknown = 1\n", "maze.kind = hexagon\n",
                           "train.normalize_advantages = maybe\n", "train.ablation = mi\n"}) {
    try {
      io::parse_config(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::parse_error || e.code() == ErrorCode::invalid_argument) << text;
    }
  }
}

TEST(Config, GoalMazeDefaultsToFarthestCell) {
  io::RunConfig cfg;
  cfg.maze_file.clear();
  cfg.maze.kind = grid::MazeKind::four_room;
  const auto m = io::goal_maze(cfg);
  ASSERT_EQ(m.goals().size(), 1u);
  const auto g = m.cell(m.goals()[0]);
  EXPECT_GT(g.row, 5);
  EXPECT_GT(g.col, 5);
  cfg.goal_row = 2;
  cfg.goal_col = 3;
  EXPECT_EQ(io::goal_maze(cfg).cell(io::goal_maze(cfg).goals()[0]), (grid::Cell{2, 3}));
}

// ---------------------------------------------------------------------------
// Checkpoints and reports.

TEST(Checkpoint, RoundTripIsExact) {
  const auto cfg = tiny_config();
  const auto maze = io::resolve_maze(cfg);
  const auto res = option::train(maze, cfg.train);
  std::stringstream ss;
  io::write_checkpoint(ss, io::make_checkpoint(cfg, maze, res));
  const std::string text = ss.str();
  const auto ck = io::read_checkpoint(ss, &maze);
  EXPECT_TRUE(ck.policies == res.policies);
  EXPECT_EQ(ck.features, res.features.rows());
  EXPECT_EQ(ck.maze, maze);
  EXPECT_EQ(io::format_config(ck.config), io::format_config(cfg));
  std::stringstream again;
  io::write_checkpoint(again, ck);
  EXPECT_EQ(again.str(), text);
}

TEST(Checkpoint, MismatchesReportIncompatible) {
  const auto cfg = tiny_config();
  const auto maze = io::resolve_maze(cfg);
  const auto res = option::train(maze, cfg.train);
  std::stringstream ss;
  io::write_checkpoint(ss, io::make_checkpoint(cfg, maze, res));
  const std::string text = ss.str();
  auto code_of = [](const std::string& t, const grid::MazeSpec* expected) {
    std::istringstream is(t);
    try {
      io::read_checkpoint(is, expected);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::empty_input;  // sentinel: no error
  };
  grid::MazeParams corridor;
  corridor.kind = grid::MazeKind::corridor;
  const auto other = grid::build_maze(corridor);
  EXPECT_EQ(code_of(text, &other), ErrorCode::incompatible);
  std::string wrong_version = text;
  wrong_version.replace(0, std::string("odpp-checkpoint 1").size(), "odpp-checkpoint 7");
  EXPECT_EQ(code_of(wrong_version, nullptr), ErrorCode::incompatible);
  std::string wrong_hash = text;
  const auto pos = wrong_hash.find("spectrum_hash ") + std::string("spectrum_hash ").size();
  wrong_hash[pos] = wrong_hash[pos] == '0' ? '1' : '0';
  EXPECT_EQ(code_of(wrong_hash, nullptr), ErrorCode::incompatible);
  EXPECT_EQ(code_of("hello\n", nullptr), ErrorCode::parse_error);
  EXPECT_EQ(code_of(text.substr(0, text.size() / 2), nullptr), ErrorCode::parse_error);
}

TEST(Reports, CsvHasOneRowPerIteration) {
  const auto cfg = tiny_config();
  const auto res = option::train(io::resolve_maze(cfg), cfg.train);
  std::ostringstream os;
  io::write_reports_csv(os, res.reports);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "iteration,l_ib,l1,l2,l3,total,entropy,kl,p_dpp,decoder_nll");
  int rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
    ++rows;
  }
  EXPECT_EQ(rows, cfg.train.iterations);
}

TEST(Reports, MetricsJsonRoundTrip) {
  eval::MetricsReport m{1.25, 2.5, 3.75, 0.5, 0.125, 42, 0xdeadbeefcafef00dULL};
  const auto back = io::metrics_from_json(nlohmann::json::parse(io::metrics_json(m).dump()));
  EXPECT_EQ(back.coverage, m.coverage);
  EXPECT_EQ(back.std_y, m.std_y);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_EQ(back.config_hash, m.config_hash);
  EXPECT_THROW(io::metrics_from_json(nlohmann::json::parse("{\"coverage\": 1}")), Error);
}

// ---------------------------------------------------------------------------
// SVG.

// Minimal structural check: every tag is closed in order, the root is <svg>.
struct SvgShape {
  bool well_formed = false;
  int polylines = 0;
  std::set<std::string> strokes;
};

SvgShape inspect_svg(const std::string& text) {
  SvgShape shape;
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([a-zA-Z]+)([^>]*?)(/?)>)");
  std::string root;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string name = m[2];
    if (root.empty()) root = name;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != name) return shape;
      stack.pop_back();
    } else if (m[4] != "/") {
      stack.push_back(name);
    }
    if (name == "polyline" && m[1] != "/") {
      ++shape.polylines;
      std::smatch s;
      const std::string attrs = m[3];
      if (std::regex_search(attrs, s, std::regex(R"(stroke="([^"]+)\")"))) shape.strokes.insert(s[1]);
    }
  }
  shape.well_formed = root == "svg" && stack.empty();
  return shape;
}

TEST(Svg, EmptyTrajectoryListRendersMazeOnly) {
  const auto shape = inspect_svg(svg::render(grid::build_maze({}), {}));
  EXPECT_TRUE(shape.well_formed);
  EXPECT_EQ(shape.polylines, 0);
}

TEST(Svg, TenOptionsGetTenColours) {
  const auto m = grid::build_maze({});
  Rng rng(2);
  std::vector<grid::TrajectoryRecord> recs;
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 2; ++k)
      recs.push_back(grid::rollout(m, m.starts()[0], [](int, int) { return grid::uniform_action_probs(); }, c, 15, rng));
  const std::string text = svg::render(m, recs);
  const auto shape = inspect_svg(text);
  EXPECT_TRUE(shape.well_formed);
  EXPECT_EQ(shape.polylines, 20);
  EXPECT_EQ(shape.strokes.size(), 10u);
  EXPECT_EQ(svg::render(m, recs), text);
}

// ---------------------------------------------------------------------------
// Commands.

TEST(Commands, SpectralToyAndFourRoom) {
  const auto dir = scratch("spectral");
  io::RunConfig cfg;
  cmd::write_text(dir / "k2.txt", "####\n#S.#\n####\n");
  cfg.maze_file = (dir / "k2.txt").string();
  const auto path = cmd::spectral(cfg, dir / "k2");
  std::ifstream in(path);
  const auto spec = spectral::read_spectrum(in);
  EXPECT_EQ(spec.dim(), 2);
  EXPECT_NEAR(spec.values(0), 0.0, 1e-12);
  EXPECT_NEAR(spec.values(1), 2.0, 1e-12);

  io::RunConfig four;
  const auto p1 = cmd::spectral(four, dir / "a");
  const auto p2 = cmd::spectral(four, dir / "b");
  const std::string text = cmd::read_text(p1);
  EXPECT_EQ(text, cmd::read_text(p2));
  std::istringstream is(text);
  EXPECT_NEAR(spectral::read_spectrum(is).values(0), 0.0, 1e-10);
}

TEST(Commands, TrainEvalPlotAreDeterministic) {
  const auto dir = scratch("determinism");
  const auto cfg = tiny_config();
  const auto a = cmd::train(cfg, dir / "a");
  const auto b = cmd::train(cfg, dir / "b");
  EXPECT_EQ(cmd::read_text(a.checkpoint), cmd::read_text(b.checkpoint));
  EXPECT_EQ(cmd::read_text(a.reports), cmd::read_text(b.reports));
  const auto ea = cmd::evaluate(a.checkpoint, dir / "a");
  const auto eb = cmd::evaluate(b.checkpoint, dir / "b");
  EXPECT_EQ(cmd::read_text(ea.metrics), cmd::read_text(eb.metrics));
  EXPECT_EQ(ea.report.config_hash, io::config_hash(cfg));
  const auto maze = io::resolve_maze(cfg);
  const auto sa = cmd::plot(ea.trajectories, maze, dir / "a" / "plot.svg");
  const auto sb = cmd::plot(eb.trajectories, maze, dir / "b" / "plot.svg");
  EXPECT_EQ(cmd::read_text(sa), cmd::read_text(sb));
  EXPECT_TRUE(inspect_svg(cmd::read_text(sa)).well_formed);
  EXPECT_EQ(inspect_svg(cmd::read_text(sa)).polylines, cfg.train.options * cfg.eval_trajectories);
}

TEST(Commands, EvalAgainstOtherMazeFails) {
  const auto dir = scratch("incompatible");
  const auto trained = cmd::train(tiny_config(), dir);
  grid::MazeParams corridor;
  corridor.kind = grid::MazeKind::corridor;
  const auto other = grid::build_maze(corridor);
  try {
    cmd::evaluate(trained.checkpoint, dir, {}, {}, &other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::incompatible);
  }
}

TEST(Commands, AblateWritesComparisonTable) {
  const auto dir = scratch("ablate");
  auto cfg = tiny_config();
  cfg.train.iterations = 2;
  const auto rows = cmd::ablate(cfg, dir);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].ablation, option::Ablation::ib);
  EXPECT_EQ(rows[2].ablation, option::Ablation::full);
  const std::string table = cmd::read_text(dir / "comparison.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(dir / "ib+l1" / "checkpoint.txt"));
}

TEST(Commands, PlotRejectsMalformedJson) {
  const auto dir = scratch("plot");
  cmd::write_text(dir / "bad.jsonl", "{\"option\": 0, \"states\": [[1,\n");
  EXPECT_THROW(cmd::plot(dir / "bad.jsonl", grid::build_maze({}), dir / "x.svg"), Error);
}

}  // namespace
}  // namespace odpp
