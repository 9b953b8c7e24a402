#pragma once

// Exhaustive enumeration of every training batch on a tiny corridor, used
// to compare the Monte-Carlo gradient estimator with finite differences of
// the exact expected objective.

#include <cmath>
#include <cstdint>
#include <vector>

#include "odpp/trainer.hpp"

namespace odpp::option::enumeration {

inline const grid::MazeSpec& corridor3() {
  static const grid::MazeSpec m = grid::parse_maze("#####\n#S..#\n#####\n");
  return m;
}

inline StateFeatureMap random_features(Rng& rng, int n, int d) {
  Matrix rows(n, d);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < d; ++j) rows(s, j) = rng.normal();
    rows.row(s).normalize();
  }
  return StateFeatureMap(rows);
}

inline void randomize(Matrix& m, Rng& rng, double scale) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
}

inline grid::TrajectoryRecord replay(const grid::MazeSpec& maze, int s0, int option, const std::vector<int>& actions) {
  grid::TrajectoryRecord r;
  r.option = option;
  r.states.push_back(s0);
  for (int a : actions) {
    r.actions.push_back(a);
    r.logprobs.push_back(0.0);
    r.states.push_back(grid::step(maze, r.states.back(), a));
  }
  return r;
}

// Every batch of K draws with M trajectories of horizon T from the single
// start cell, listed once.
inline std::vector<Batch> enumerate_batches(const grid::MazeSpec& maze, int options, int k, int m, int t) {
  const int s0 = maze.starts().front();
  int seqs = 1;
  for (int i = 0; i < t; ++i) seqs *= grid::kActionCount;
  std::vector<Draw> draws;
  for (int c = 0; c < options; ++c) {
    int joint = 1;
    for (int i = 0; i < m; ++i) joint *= seqs;
    for (int code = 0; code < joint; ++code) {
      Draw d;
      d.s0 = s0;
      d.option = c;
      int rest = code;
      for (int j = 0; j < m; ++j) {
        int seq = rest % seqs;
        rest /= seqs;
        std::vector<int> actions;
        for (int i = 0; i < t; ++i) {
          actions.push_back(seq % grid::kActionCount);
          seq /= grid::kActionCount;
        }
        d.trajectories.push_back(replay(maze, s0, c, actions));
      }
      draws.push_back(std::move(d));
    }
  }
  std::vector<Batch> out;
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  while (true) {
    Batch b;
    for (std::size_t i : idx) b.draws.push_back(draws[i]);
    out.push_back(std::move(b));
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == draws.size()) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

inline double batch_probability(const Batch& b, const OptionPolicySet& p) {
  double lp = 0.0;
  for (const auto& d : b.draws) {
    lp += p.prior_logprob(d.s0, d.option);
    for (const auto& r : d.trajectories) lp += policy_logprob(r, p);
  }
  return std::exp(lp);
}

inline double exact_objective(std::vector<Batch> batches, const OptionPolicySet& p, const StateFeatureMap& feats,
                       const OptionConfig& cfg) {
  double j = 0.0;
  for (auto& b : batches) j += batch_probability(b, p) * batch_objective(evaluate_batch(b, p, feats, cfg), cfg.weights());
  return j;
}

struct GradCase {
  int k, m, t, dim;
  double beta, alpha1, alpha2, alpha3;
};

struct GradComparison {
  double mass = 0.0;           // total probability of the enumerated batches
  double prior_error = 0.0;    // max abs difference, prior logits
  double policy_error = 0.0;   // max abs difference, policy logits
  double reference_norm = 0.0;  // norm of the finite-difference gradient
  Gradients expected;
  Matrix fd_prior, fd_policy;
};

inline GradComparison compare_gradients(const GradCase& gc, std::uint64_t seed) {
  const auto& maze = corridor3();
  Rng rng(seed);
  const auto feats = random_features(rng, maze.state_count(), gc.dim);
  OptionConfig cfg;
  cfg.options = 2;
  cfg.horizon = gc.t;
  cfg.per_pair = gc.m;
  cfg.trajectories_per_iteration = gc.k * gc.m;
  cfg.landmarks = gc.t + 1;
  cfg.feature_dim = gc.dim;
  cfg.beta = gc.beta;
  cfg.alpha1 = gc.alpha1;
  cfg.alpha2 = gc.alpha2;
  cfg.alpha3 = gc.alpha3;
  OptionPolicySet p(maze.state_count(), 2, gc.dim);
  randomize(p.prior, rng, 0.7);
  randomize(p.policy, rng, 0.7);
  randomize(p.decoder, rng, 1.0);

  auto batches = enumerate_batches(maze, 2, gc.k, gc.m, gc.t);
  GradComparison out;
  out.expected = {Matrix::Zero(p.prior.rows(), p.prior.cols()), Matrix::Zero(p.policy.rows(), p.policy.cols())};
  for (auto& b : batches) {
    const double pr = batch_probability(b, p);
    out.mass += pr;
    const auto ev = evaluate_batch(b, p, feats, cfg);
    const auto g = estimate_gradients(b, ev, p, cfg);
    out.expected.prior += pr * g.prior;
    out.expected.policy += pr * g.policy;
  }

  const double h = 1e-5;
  auto fd = [&](Matrix OptionPolicySet::*field, Matrix& dst) {
    dst = Matrix::Zero((p.*field).rows(), (p.*field).cols());
    for (Eigen::Index i = 0; i < dst.size(); ++i) {
      OptionPolicySet a = p, b = p;
      (a.*field).data()[i] += h;
      (b.*field).data()[i] -= h;
      dst.data()[i] = (exact_objective(batches, a, feats, cfg) - exact_objective(batches, b, feats, cfg)) / (2 * h);
    }
  };
  fd(&OptionPolicySet::prior, out.fd_prior);
  fd(&OptionPolicySet::policy, out.fd_policy);
  out.prior_error = (out.expected.prior - out.fd_prior).cwiseAbs().maxCoeff();
  out.policy_error = (out.expected.policy - out.fd_policy).cwiseAbs().maxCoeff();
  out.reference_norm = out.fd_prior.norm() + out.fd_policy.norm();
  return out;
}

}  // namespace odpp::option::enumeration
