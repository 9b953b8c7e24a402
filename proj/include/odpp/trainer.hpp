#pragma once

// Collect-then-update option discovery loop: sample (s0, c) draws from the
// prior, roll out M trajectories per draw, score them with the information
// and DPP terms, and apply score-function updates to the prior and the
// intra-option policies while fitting the landmark decoder by likelihood.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "odpp/dpp.hpp"
#include "odpp/error.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/objectives.hpp"
#include "odpp/policy.hpp"
#include "odpp/random.hpp"
#include "odpp/spectral.hpp"

namespace odpp::option {

enum class Ablation { ib, ib_l1, full, l1_only };

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::ib: return "ib";
    case Ablation::ib_l1: return "ib+l1";
    case Ablation::full: return "full";
    case Ablation::l1_only: return "l1";
  }
  return "?";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "ib") return Ablation::ib;
  if (s == "ib+l1") return Ablation::ib_l1;
  if (s == "full") return Ablation::full;
  if (s == "l1") return Ablation::l1_only;
  fail(ErrorCode::invalid_argument, "unknown ablation '" + s + "' (expected ib, ib+l1, full or l1)");
}

struct OptionConfig {
  int options = 10;
  int horizon = 50;
  int per_pair = 5;  // M
  int trajectories_per_iteration = 100;
  int landmarks = 10;    // S
  int feature_dim = 30;  // D
  double beta = 1e-3;
  double alpha1 = 1e-4;
  double alpha2 = 1e-2;
  double alpha3 = 1e-2;
  double lr_prior = 0.1;
  double lr_policy = 0.1;
  double lr_decoder = 0.5;
  int decoder_steps = 1;
  int iterations = 500;
  std::uint64_t seed = 0;
  bool normalize_advantages = false;
  int spectrum_period = 0;  // 0: exact spectrum of the full maze; k: replay graph every k iterations
  Ablation ablation = Ablation::full;

  int draws() const { return trajectories_per_iteration / per_pair; }

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) fail(ErrorCode::invalid_argument, "config: " + what);
    };
    need(options >= 1, "options must be >= 1");
    need(horizon >= 1, "horizon must be >= 1");
    need(per_pair >= 1, "per_pair (M) must be >= 1");
    need(trajectories_per_iteration >= per_pair, "trajectories_per_iteration must be >= per_pair");
    need(landmarks >= 1 && landmarks <= horizon + 1, "landmarks (S) must lie in [1, horizon + 1]");
    need(feature_dim >= 1, "feature_dim must be >= 1");
    need(beta >= 0 && alpha1 >= 0 && alpha2 >= 0 && alpha3 >= 0, "objective weights must be >= 0");
    need(lr_prior >= 0 && lr_policy >= 0 && lr_decoder >= 0, "learning rates must be >= 0");
    need(decoder_steps >= 0 && iterations >= 0 && spectrum_period >= 0, "counts must be >= 0");
  }

  /// Weights after applying the ablation mask.
  ObjectiveWeights weights() const {
    ObjectiveWeights w{1.0, beta, alpha1, alpha2, alpha3};
    switch (ablation) {
      case Ablation::ib: w.alpha1 = w.alpha2 = w.alpha3 = 0.0; break;
      case Ablation::ib_l1: w.alpha2 = w.alpha3 = 0.0; break;
      case Ablation::full: break;
      case Ablation::l1_only: w.info = 0.0; w.beta = w.alpha2 = w.alpha3 = 0.0; break;
    }
    return w;
  }
};

struct ObjectiveReport {
  int iteration = 0;
  double l_ib = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double total = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double p_dpp = 0.0;        // mean P(G | tau), logged for inspection
  double decoder_nll = 0.0;  // before this iteration's decoder update
};

/// M trajectories of one option from one start state.
struct Draw {
  int s0 = 0;
  int option = 0;
  std::vector<TrajectoryRecord> trajectories;
};

struct Batch {
  std::vector<Draw> draws;
};

/// s0 uniform over the maze's start cells, c ~ P_omega(. | s0), then M
/// rollouts each on its own child generator.
inline Batch collect_batch(const grid::MazeSpec& maze, const OptionPolicySet& p, const OptionConfig& cfg, Rng& rng) {
  Batch b;
  const int k = cfg.draws();
  b.draws.reserve(static_cast<std::size_t>(k));
  auto policy = [&p](int s, int c) { return p.action_probs(s, c); };
  for (int i = 0; i < k; ++i) {
    Draw d;
    d.s0 = maze.starts()[rng.index(maze.starts().size())];
    const Vector probs = p.prior_probs(d.s0);
    d.option = static_cast<int>(rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size()))));
    for (int m = 0; m < cfg.per_pair; ++m) {
      Rng child = rng.split();
      d.trajectories.push_back(grid::rollout(maze, d.s0, policy, d.option, cfg.horizon, child));
    }
    b.draws.push_back(std::move(d));
  }
  return b;
}

/// Every scalar the update needs, indexed [draw][trajectory].
struct BatchEvaluation {
  std::vector<std::vector<TrajectoryTerms>> terms;
  std::vector<std::vector<double>> q_policy;
  std::vector<double> q_prior;        // -log P_omega + sum_m Q_m
  std::vector<double> prior_logprob;  // log P_omega(c | s0)
  std::vector<double> g;              // per draw
  std::vector<double> h;              // per draw: h of the union at its s0
  std::vector<std::vector<double>> g_without;  // g with trajectory m removed
  std::vector<std::vector<double>> h_without;  // h with trajectory m removed
  std::vector<double> h_without_draw;          // h with the whole draw removed
  std::vector<double> group_size;              // draws sharing this draw's s0
  std::map<int, double> h_by_start;
  double kl_mean = 0.0;
};

/// Fills landmarks and trajectory features in place and computes all terms.
inline BatchEvaluation evaluate_batch(Batch& batch, const OptionPolicySet& p, const StateFeatureMap& feats,
                                      const OptionConfig& cfg) {
  const ObjectiveWeights w = cfg.weights();
  const auto k = batch.draws.size();
  if (k == 0) fail(ErrorCode::empty_input, "batch has no draws");
  BatchEvaluation ev;
  ev.terms.resize(k);
  ev.q_policy.resize(k);
  ev.g.resize(k);
  ev.h.resize(k);
  ev.g_without.resize(k);
  ev.h_without.resize(k);
  ev.h_without_draw.resize(k);
  ev.group_size.resize(k);
  std::size_t traj_count = 0;

  for (std::size_t i = 0; i < k; ++i) {
    auto& d = batch.draws[i];
    if (d.trajectories.empty()) fail(ErrorCode::empty_input, "draw without trajectories");
    std::vector<Vector> draw_feats;
    for (auto& rec : d.trajectories) {
      const auto kernel = trajectory_kernel(rec, feats);
      const auto g = dpp::greedy_map_trace(kernel, std::min<std::size_t>(static_cast<std::size_t>(cfg.landmarks), kernel.size()),
                                           dpp::StopRule::degenerate)
                         .subset();
      rec.landmarks.assign(g.indices().begin(), g.indices().end());
      const auto lm = landmark_states(rec, g);
      rec.feature = trajectory_feature(lm, feats);
      draw_feats.push_back(rec.feature);

      TrajectoryTerms t;
      const double ll = dpp::dpp_log_likelihood(kernel, g);
      t.p_dpp = ll == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(ll);
      t.decoder_logprob = decoder_logprob(p, d.s0, landmark_bag(lm, feats), d.option);
      t.log_pi = policy_logprob(rec, p);
      t.f = dpp::expected_cardinality_trace(kernel);
      ev.kl_mean += t.log_pi + rec.horizon() * std::log(static_cast<double>(grid::kActionCount));
      ev.terms[i].push_back(t);
      ++traj_count;
    }
    ev.g[i] = g_consistency(draw_feats);
    Matrix rows(static_cast<Eigen::Index>(draw_feats.size()), feats.dim());
    for (std::size_t m = 0; m < draw_feats.size(); ++m) rows.row(static_cast<Eigen::Index>(m)) = draw_feats[m].transpose();
    ev.g_without[i] = dpp::expected_cardinality_leave_one_out(dpp::gram_kernel_rows(rows));
  }
  ev.kl_mean /= static_cast<double>(traj_count);

  // Union sets per start state.
  std::map<int, std::vector<std::pair<std::size_t, std::size_t>>> groups;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t m = 0; m < batch.draws[i].trajectories.size(); ++m) groups[batch.draws[i].s0].emplace_back(i, m);
  for (const auto& [s0, members] : groups) {
    Matrix rows(static_cast<Eigen::Index>(members.size()), feats.dim());
    for (std::size_t r = 0; r < members.size(); ++r)
      rows.row(static_cast<Eigen::Index>(r)) =
          batch.draws[members[r].first].trajectories[members[r].second].feature.transpose();
    const auto kernel = dpp::gram_kernel_rows(rows);
    const double h = dpp::expected_cardinality(kernel);
    ev.h_by_start[s0] = h;
    const auto loo = dpp::expected_cardinality_leave_one_out(kernel);
    std::set<std::size_t> draws_here;
    for (std::size_t r = 0; r < members.size(); ++r) {
      const auto [i, m] = members[r];
      ev.h[i] = h;
      if (ev.h_without[i].size() <= m) ev.h_without[i].resize(m + 1);
      ev.h_without[i][m] = loo[r];
      draws_here.insert(i);
    }
    for (std::size_t i : draws_here) {
      ev.group_size[i] = static_cast<double>(draws_here.size());
      std::vector<std::size_t> keep;
      for (std::size_t r = 0; r < members.size(); ++r)
        if (members[r].first != i) keep.push_back(r);
      ev.h_without_draw[i] =
          dpp::expected_cardinality_trace(dpp::KernelMatrix::trusted(dpp::principal_submatrix(kernel.entries(), keep)));
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    const auto& d = batch.draws[i];
    const int m_count = static_cast<int>(d.trajectories.size());
    for (const auto& t : ev.terms[i]) ev.q_policy[i].push_back(q_policy_m(t, ev.g[i], ev.h[i], w, m_count));
    ev.prior_logprob.push_back(p.prior_logprob(d.s0, d.option));
    ev.q_prior.push_back(q_prior(ev.prior_logprob.back(), ev.q_policy[i]));
  }
  return ev;
}

struct Gradients {
  Matrix prior;
  Matrix policy;
};

/// Advantage of draw i for the prior update. Each draw's g and h enter once;
/// the per-trajectory form sums them M times, so that surplus is removed.
inline double prior_q(const BatchEvaluation& ev, std::size_t i, const ObjectiveWeights& w) {
  const double m = static_cast<double>(ev.q_policy[i].size());
  const double info_removed = (1.0 - w.info) * ev.prior_logprob[i];
  return ev.q_prior[i] + info_removed - (m - 1.0) * (-w.alpha2 * ev.g[i] + w.alpha3 * ev.h[i]);
}

/// Score-function gradients of the batch objective. Baselines use only
/// quantities independent of the sample they are subtracted from: the other
/// draws (prior) or the sibling trajectories (policy), with g and h
/// recomputed on the sets that exclude it. Every draw of a start group
/// carries that group's h, so a sample's share of h is scaled by the group
/// size.
inline Gradients estimate_gradients(const Batch& batch, const BatchEvaluation& ev, const OptionPolicySet& p,
                                    const OptionConfig& cfg) {
  const ObjectiveWeights w = cfg.weights();
  const std::size_t k = batch.draws.size();
  Gradients grad{Matrix::Zero(p.prior.rows(), p.prior.cols()), Matrix::Zero(p.policy.rows(), p.policy.cols())};

  // Prior: per-draw advantage without the diversity term, plus h.
  std::vector<double> partial(k);
  double partial_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    partial[i] = prior_q(ev, i, w) - w.alpha3 * ev.h[i];
    partial_sum += partial[i];
  }
  std::vector<double> adv_prior(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double others = k > 1 ? (partial_sum - partial[i]) / static_cast<double>(k - 1) : 0.0;
    adv_prior[i] = partial[i] - others + ev.group_size[i] * w.alpha3 * (ev.h[i] - ev.h_without_draw[i]);
  }

  std::vector<std::vector<double>> adv_policy(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& terms = ev.terms[i];
    const int m_count = static_cast<int>(terms.size());
    double own_sum = 0.0;
    for (const auto& t : terms) own_sum += own_term(t, w, m_count);
    for (int m = 0; m < m_count; ++m) {
      const double own = own_term(terms[static_cast<std::size_t>(m)], w, m_count);
      const double others = m_count > 1 ? (own_sum - own) / (m_count - 1) : 0.0;
      const auto mi = static_cast<std::size_t>(m);
      adv_policy[i].push_back(own - others - w.alpha2 * (ev.g[i] - ev.g_without[i][mi]) +
                              ev.group_size[i] * w.alpha3 * (ev.h[i] - ev.h_without[i][mi]));
    }
  }

  if (cfg.normalize_advantages) {
    auto rescale = [](auto& values_ref, auto&& each) {
      double sq = 0.0;
      std::size_t n = 0;
      each(values_ref, [&](double& a) { sq += a * a; ++n; });
      const double rms = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
      if (rms > 1e-12) each(values_ref, [&](double& a) { a /= rms; });
    };
    rescale(adv_prior, [](auto& v, auto&& fn) { for (double& a : v) fn(a); });
    rescale(adv_policy, [](auto& v, auto&& fn) { for (auto& row : v) for (double& a : row) fn(a); });
  }

  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& d = batch.draws[i];
    const Vector probs = p.prior_probs(d.s0);
    Vector score = -probs;
    score(d.option) += 1.0;
    grad.prior.row(d.s0) += inv_k * adv_prior[i] * score.transpose();
    for (std::size_t m = 0; m < d.trajectories.size(); ++m) {
      const auto& rec = d.trajectories[m];
      const double a = inv_k * adv_policy[i][m];
      for (int t = 0; t < rec.horizon(); ++t) {
        const int s = rec.states[static_cast<std::size_t>(t)];
        const auto pa = p.action_probs(s, d.option);
        const auto row = p.policy_row(s, d.option);
        for (int act = 0; act < grid::kActionCount; ++act)
          grad.policy(row, act) += a * ((act == rec.actions[static_cast<std::size_t>(t)] ? 1.0 : 0.0) - pa[static_cast<std::size_t>(act)]);
      }
    }
  }
  if (!grad.prior.allFinite() || !grad.policy.allFinite())
    fail(ErrorCode::non_finite, "non-finite policy gradient");
  return grad;
}

/// Scalar batch objective whose expectation the estimator differentiates:
/// the mean over draws of the per-draw prior value.
inline double batch_objective(const BatchEvaluation& ev, const ObjectiveWeights& w) {
  double total = 0.0;
  for (std::size_t i = 0; i < ev.q_prior.size(); ++i) total += prior_q(ev, i, w);
  return total / static_cast<double>(ev.q_prior.size());
}

inline std::vector<DecoderSample> decoder_batch(const Batch& batch, const StateFeatureMap& feats) {
  std::vector<DecoderSample> out;
  for (const auto& d : batch.draws)
    for (const auto& rec : d.trajectories) {
      std::vector<int> lm;
      for (int pos : rec.landmarks) lm.push_back(rec.states[static_cast<std::size_t>(pos)]);
      out.push_back({d.s0, landmark_bag(lm, feats), d.option});
    }
  return out;
}

inline ObjectiveReport summarize(const BatchEvaluation& ev, const OptionPolicySet& p,
                                 const grid::MazeSpec& maze, const OptionConfig& cfg) {
  const ObjectiveWeights w = cfg.weights();
  ObjectiveReport r;
  r.entropy = entropy_prior(p, maze.starts());
  r.kl = ev.kl_mean;
  double decoder_term = 0.0;
  std::size_t n = 0;
  for (const auto& row : ev.terms)
    for (const auto& t : row) {
      decoder_term += t.p_dpp * t.decoder_logprob;
      r.p_dpp += t.p_dpp;
      r.l1 += t.f;
      ++n;
    }
  decoder_term /= static_cast<double>(n);
  r.p_dpp /= static_cast<double>(n);
  r.l1 /= static_cast<double>(n);
  for (double g : ev.g) r.l2 += g;
  r.l2 /= static_cast<double>(ev.g.size());
  for (const auto& [s0, h] : ev.h_by_start) r.l3 += h;
  r.l3 /= static_cast<double>(ev.h_by_start.size());
  r.l_ib = r.entropy + decoder_term - cfg.beta * r.kl;
  r.total = w.info * (r.entropy + decoder_term) - w.beta * r.kl + w.alpha1 * r.l1 - w.alpha2 * r.l2 + w.alpha3 * r.l3;
  return r;
}

/// One update: gradients for prior and policies, ascent step, then decoder
/// NLL descent on the MAP landmark sets of this batch only.
inline ObjectiveReport gradient_step(Batch& batch, OptionPolicySet& p, const StateFeatureMap& feats,
                                     const grid::MazeSpec& maze, const OptionConfig& cfg) {
  const auto ev = evaluate_batch(batch, p, feats, cfg);
  ObjectiveReport report = summarize(ev, p, maze, cfg);
  const auto grad = estimate_gradients(batch, ev, p, cfg);
  p.prior += cfg.lr_prior * grad.prior;
  p.policy += cfg.lr_policy * grad.policy;
  if (cfg.weights().info > 0.0 && cfg.decoder_steps > 0) {
    const auto samples = decoder_batch(batch, feats);
    report.decoder_nll = decoder_update(p, samples, cfg.lr_decoder, cfg.decoder_steps);
  }
  if (!p.all_finite()) fail(ErrorCode::non_finite, "parameters became non-finite");
  return report;
}

/// Unit features from the bottom-D Laplacian spectrum of the full maze.
inline spectral::LaplacianSpectrum maze_spectrum(const grid::MazeSpec& maze, int feature_dim) {
  const int d = std::min(feature_dim, maze.state_count());
  return spectral::spectrum(spectral::laplacian(grid::maze_graph(maze)), d);
}

struct TrainResult {
  OptionPolicySet policies;
  std::vector<ObjectiveReport> reports;
  spectral::LaplacianSpectrum spectrum;
  StateFeatureMap features;
};

using IterationCallback = std::function<void(int, const Batch&, const BatchEvaluation&)>;

/// Algorithm loop. The batch is rebuilt from scratch every iteration. With
/// spectrum_period > 0 the features come from the graph of all transitions
/// observed so far, recomputed every `spectrum_period` iterations.
inline TrainResult train(const grid::MazeSpec& maze, const OptionConfig& cfg, const IterationCallback& on_batch = {}) {
  cfg.validate();
  TrainResult out;
  out.spectrum = maze_spectrum(maze, cfg.feature_dim);
  const int d = out.spectrum.dim();
  out.features = spectral::state_features(out.spectrum);
  out.policies = OptionPolicySet(maze.state_count(), cfg.options, d);
  Rng rng(cfg.seed);
  std::set<std::pair<int, int>> observed;
  for (int it = 0; it < cfg.iterations; ++it) {
    Batch batch = collect_batch(maze, out.policies, cfg, rng);
    if (cfg.spectrum_period > 0) {
      for (const auto& dr : batch.draws)
        for (const auto& rec : dr.trajectories)
          for (std::size_t t = 0; t + 1 < rec.states.size(); ++t) observed.insert({rec.states[t], rec.states[t + 1]});
      if (it % cfg.spectrum_period == 0) {
        std::vector<spectral::Transition> tr;
        for (auto [a, b] : observed) tr.push_back({a, 0, b});
        out.features = spectral::component_state_features(spectral::build_graph(maze.state_count(), tr), d);
      }
    }
    if (on_batch) {
      Batch copy = batch;
      const auto ev = evaluate_batch(copy, out.policies, out.features, cfg);
      on_batch(it, copy, ev);
    }
    ObjectiveReport r = gradient_step(batch, out.policies, out.features, maze, cfg);
    r.iteration = it;
    out.reports.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Downstream option selector.

struct SelectorConfig {
  int iterations = 300;
  int episodes = 20;        // per iteration
  int max_decisions = 8;    // option choices per episode
  int option_horizon = 10;  // primitive steps per option choice
  double lr = 2.0;
  double goal_reward = 1.0;
  double step_penalty = 0.01;
  double threshold = 0.25;  // mean episode return counted as solved
  bool init_from_prior = false;
  std::uint64_t seed = 0;
};

struct SelectorResult {
  Matrix selector;
  std::vector<double> mean_returns;
  int iterations_to_threshold = -1;  // first iteration (1-based) at threshold, -1 if never
};

/// Option-level episode from the first start cell: pick c ~ P_psi(. | s),
/// run pi(. | ., c) for up to option_horizon steps, stop at any goal cell.
/// Returns (state, option, reward) per decision.
struct SelectorStep {
  int state;
  int option;
  double reward;
};

inline std::vector<SelectorStep> selector_episode(const grid::MazeSpec& maze, const OptionPolicySet& p,
                                                  const Matrix& selector, const SelectorConfig& cfg, Rng& rng) {
  std::vector<SelectorStep> steps;
  const std::set<int> goals(maze.goals().begin(), maze.goals().end());
  int s = maze.starts().front();
  auto policy = [&p](int st, int c) { return p.action_probs(st, c); };
  for (int k = 0; k < cfg.max_decisions; ++k) {
    const Vector probs = softmax(selector.row(s).transpose());
    const int c = static_cast<int>(rng.categorical(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size()))));
    double reward = 0.0;
    bool done = false;
    const int start = s;
    for (int t = 0; t < cfg.option_horizon && !done; ++t) {
      const auto pa = policy(s, c);
      s = grid::step(maze, s, static_cast<int>(rng.categorical(pa)));
      reward -= cfg.step_penalty;
      if (goals.count(s)) {
        reward += cfg.goal_reward;
        done = true;
      }
    }
    steps.push_back({start, c, reward});
    if (done) break;
  }
  return steps;
}

/// REINFORCE over option-level decisions with return-to-go and a
/// leave-one-out mean-return baseline.
inline SelectorResult train_selector(const grid::MazeSpec& maze, const OptionPolicySet& p, const SelectorConfig& cfg) {
  if (p.options() < 1) fail(ErrorCode::invalid_argument, "selector needs at least one option");
  if (maze.goals().empty()) fail(ErrorCode::invalid_argument, "selector task needs a goal cell");
  if (maze.state_count() != p.states()) fail(ErrorCode::incompatible, "options were trained on a different maze");
  SelectorResult res;
  res.selector = cfg.init_from_prior ? p.prior : Matrix::Zero(p.prior.rows(), p.prior.cols());
  Rng rng(cfg.seed);
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<std::vector<SelectorStep>> eps;
    std::vector<double> returns;
    double total = 0.0;
    for (int e = 0; e < cfg.episodes; ++e) {
      Rng child = rng.split();
      eps.push_back(selector_episode(maze, p, res.selector, cfg, child));
      double ret = 0.0;
      for (const auto& st : eps.back()) ret += st.reward;
      returns.push_back(ret);
      total += ret;
    }
    const double mean = total / cfg.episodes;
    res.mean_returns.push_back(mean);
    if (res.iterations_to_threshold < 0 && mean >= cfg.threshold) res.iterations_to_threshold = it + 1;
    Matrix grad = Matrix::Zero(res.selector.rows(), res.selector.cols());
    for (int e = 0; e < cfg.episodes; ++e) {
      const double baseline = cfg.episodes > 1 ? (total - returns[static_cast<std::size_t>(e)]) / (cfg.episodes - 1) : 0.0;
      // Undiscounted return-to-go per decision.
      double to_go = returns[static_cast<std::size_t>(e)];
      for (const auto& st : eps[static_cast<std::size_t>(e)]) {
        const Vector probs = softmax(res.selector.row(st.state).transpose());
        Vector score = -probs;
        score(st.option) += 1.0;
        grad.row(st.state) += (to_go - baseline) * score.transpose() / cfg.episodes;
        to_go -= st.reward;
      }
    }
    res.selector += cfg.lr * grad;
  }
  return res;
}

}  // namespace odpp::option
