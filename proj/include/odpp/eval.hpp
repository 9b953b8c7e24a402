#pragma once

// Option-set metrics from fresh rollouts: DPP coverage and diversity plus
// final-state distance and spread in cell units.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "odpp/error.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/objectives.hpp"
#include "odpp/policy.hpp"
#include "odpp/random.hpp"

namespace odpp::eval {

using option::OptionPolicySet;
using spectral::StateFeatureMap;

struct MetricsReport {
  double coverage = 0.0;       // mean single-trajectory coverage over all options
  double diversity = 0.0;      // expected cardinality over the union of trajectory features
  double mean_distance = 0.0;  // mean final-state distance from the start cell
  double std_x = 0.0;
  double std_y = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Final-state statistics with x the column offset and y the upward row
/// offset from `origin`. Standard deviations are population values.
struct FinalStateStats {
  double mean_distance = 0.0;
  double std_x = 0.0;
  double std_y = 0.0;
};

inline FinalStateStats final_state_stats(const grid::MazeSpec& maze, int origin,
                                         const std::vector<grid::TrajectoryRecord>& recs) {
  if (recs.empty()) fail(ErrorCode::empty_input, "no trajectories to score");
  const grid::Cell o = maze.cell(origin);
  double sd = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& r : recs) {
    const grid::Cell c = maze.cell(r.final_state());
    const double x = c.col - o.col;
    const double y = o.row - c.row;
    sd += std::sqrt(x * x + y * y);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
  }
  const double n = static_cast<double>(recs.size());
  FinalStateStats st;
  st.mean_distance = sd / n;
  st.std_x = std::sqrt(std::max(0.0, sxx / n - (sx / n) * (sx / n)));
  st.std_y = std::sqrt(std::max(0.0, syy / n - (sy / n) * (sy / n)));
  return st;
}

struct EvalOptions {
  int trajectories_per_option = 10;
  int horizon = 50;
  int landmarks = 10;
  std::uint64_t seed = 0;
};

/// Scores rollouts stored option-major: `recs[c * n + k]` is the k-th
/// rollout of option c, all from `origin`. Replicate k is the set holding
/// one rollout per option. Coverage and distance average over every
/// rollout; diversity and the final-state spreads are computed within each
/// replicate and then averaged.
inline MetricsReport score_trajectories(const grid::MazeSpec& maze, int origin,
                                        const std::vector<grid::TrajectoryRecord>& recs, int options,
                                        const StateFeatureMap& feats, int landmarks) {
  if (options < 1 || recs.empty() || recs.size() % static_cast<std::size_t>(options) != 0)
    fail(ErrorCode::dimension_mismatch, "trajectory count is not a multiple of the option count");
  const std::size_t n = recs.size() / static_cast<std::size_t>(options);
  MetricsReport m;
  std::vector<Vector> features;
  for (const auto& r : recs) {
    if (r.start() != origin) fail(ErrorCode::invalid_argument, "trajectories must share the origin cell");
    m.coverage += option::f_coverage(r, feats);
    const auto g = option::extract_landmarks(r, feats, landmarks);
    features.push_back(option::trajectory_feature(option::landmark_states(r, g), feats));
  }
  m.coverage /= static_cast<double>(recs.size());
  m.mean_distance = final_state_stats(maze, origin, recs).mean_distance;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<grid::TrajectoryRecord> set;
    std::vector<Vector> set_features;
    for (std::size_t c = 0; c < static_cast<std::size_t>(options); ++c) {
      set.push_back(recs[c * n + k]);
      set_features.push_back(features[c * n + k]);
    }
    const auto st = final_state_stats(maze, origin, set);
    m.std_x += st.std_x / static_cast<double>(n);
    m.std_y += st.std_y / static_cast<double>(n);
    m.diversity += option::h_diversity(set_features) / static_cast<double>(n);
  }
  return m;
}

/// Rolls out every option `trajectories_per_option` times from the first
/// start cell. Rollout k of option c uses the k-th child of a generator
/// seeded per option, so adding options never perturbs existing ones.
inline std::vector<grid::TrajectoryRecord> sample_option_trajectories(const grid::MazeSpec& maze,
                                                                      const OptionPolicySet& p, const EvalOptions& o) {
  if (maze.state_count() != p.states()) fail(ErrorCode::incompatible, "checkpoint was trained on a different maze");
  if (o.trajectories_per_option < 1) fail(ErrorCode::invalid_argument, "need at least one trajectory per option");
  const int s0 = maze.starts().front();
  auto policy = [&p](int s, int c) { return p.action_probs(s, c); };
  std::vector<grid::TrajectoryRecord> recs;
  for (int c = 0; c < p.options(); ++c) {
    Rng rng(o.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(c + 1)));
    for (int k = 0; k < o.trajectories_per_option; ++k) {
      Rng child = rng.split();
      recs.push_back(grid::rollout(maze, s0, policy, c, o.horizon, child));
    }
  }
  return recs;
}

inline MetricsReport evaluate_options(const grid::MazeSpec& maze, const OptionPolicySet& p,
                                      const StateFeatureMap& feats, const EvalOptions& o) {
  const auto recs = sample_option_trajectories(maze, p, o);
  MetricsReport m = score_trajectories(maze, maze.starts().front(), recs, p.options(), feats, o.landmarks);
  m.seed = o.seed;
  return m;
}

}  // namespace odpp::eval
