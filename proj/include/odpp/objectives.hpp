#pragma once

// Landmarks, trajectory features, the coverage / consistency / diversity
// measures, the landmark decoder and the per-trajectory and per-option
// Q values that drive the score-function updates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "odpp/dpp.hpp"
#include "odpp/error.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/policy.hpp"
#include "odpp/spectral.hpp"

namespace odpp::option {

using grid::TrajectoryRecord;
using spectral::StateFeatureMap;

/// Unit-quality kernel over the T+1 visited positions of a trajectory.
inline dpp::KernelMatrix trajectory_kernel(const TrajectoryRecord& rec, const StateFeatureMap& feats) {
  if (rec.states.empty()) fail(ErrorCode::empty_input, "trajectory has no states");
  return dpp::gram_kernel_rows(feats.gather(rec.states));
}

/// Greedy MAP landmark positions (indices into rec.states). Selection stops
/// at S items or once every remaining candidate lies in the span of the
/// chosen ones, so repeated cells are never picked twice.
inline dpp::ItemSubset extract_landmarks(const TrajectoryRecord& rec, const StateFeatureMap& feats, int s) {
  if (s < 1) fail(ErrorCode::invalid_argument, "landmark count must be >= 1");
  const auto kernel = trajectory_kernel(rec, feats);
  const std::size_t cap = std::min<std::size_t>(static_cast<std::size_t>(s), kernel.size());
  return dpp::greedy_map_trace(kernel, cap, dpp::StopRule::degenerate).subset();
}

inline std::vector<int> landmark_states(const TrajectoryRecord& rec, const dpp::ItemSubset& g) {
  std::vector<int> out;
  for (std::size_t i : g.indices()) out.push_back(rec.states[i]);
  return out;
}

/// Structured-DPP trajectory feature: the landmark feature sum, renormalized.
inline Vector trajectory_feature(const std::vector<int>& landmarks, const StateFeatureMap& feats) {
  if (landmarks.empty()) fail(ErrorCode::empty_input, "trajectory feature needs at least one landmark");
  Vector sum = Vector::Zero(feats.dim());
  for (int s : landmarks) sum += feats[s];
  const double norm = sum.norm();
  if (!(norm > 1e-12)) fail(ErrorCode::zero_feature, "landmark features cancel exactly");
  return sum / norm;
}

/// Mean landmark feature; the decoder's view of a landmark bag.
inline Vector landmark_bag(const std::vector<int>& landmarks, const StateFeatureMap& feats) {
  if (landmarks.empty()) fail(ErrorCode::empty_input, "landmark bag is empty");
  Vector sum = Vector::Zero(feats.dim());
  for (int s : landmarks) sum += feats[s];
  return sum / static_cast<double>(landmarks.size());
}

/// Coverage: expected DPP cardinality over all visited-state features.
inline double f_coverage(const TrajectoryRecord& rec, const StateFeatureMap& feats) {
  return dpp::expected_cardinality_trace(trajectory_kernel(rec, feats));
}

/// Expected cardinality of the Gram kernel of unit trajectory features.
inline double feature_set_cardinality(const std::vector<Vector>& features) {
  if (features.empty()) return 0.0;
  Matrix rows(static_cast<Eigen::Index>(features.size()), features.front().size());
  for (std::size_t i = 0; i < features.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = features[i].transpose();
  return dpp::expected_cardinality_trace(dpp::gram_kernel_rows(rows));
}

/// Consistency of the M trajectories of one (s0, c) draw; the trainer
/// penalizes it, so low values mean similar trajectories.
inline double g_consistency(const std::vector<Vector>& draw_features) {
  if (draw_features.empty()) fail(ErrorCode::empty_input, "g needs at least one trajectory");
  return feature_set_cardinality(draw_features);
}

/// Diversity over the union of trajectories of all options at one s0.
inline double h_diversity(const std::vector<Vector>& union_features) {
  if (union_features.empty()) fail(ErrorCode::empty_input, "h needs a nonempty union set");
  return feature_set_cardinality(union_features);
}

/// P(G | tau) under the trajectory DPP; 0 when L_G is singular.
inline double landmark_probability(const TrajectoryRecord& rec, const dpp::ItemSubset& g,
                                   const StateFeatureMap& feats) {
  const double ll = dpp::dpp_log_likelihood(trajectory_kernel(rec, feats), g);
  return ll == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(ll);
}

// ---------------------------------------------------------------------------
// Decoder: linear softmax over [one-hot(s0), mean landmark feature].

struct DecoderSample {
  int s0 = 0;
  Vector bag;
  int option = 0;
};

inline Vector decoder_logits(const OptionPolicySet& p, int s0, const Vector& bag) {
  if (bag.size() != p.feature_dim()) fail(ErrorCode::dimension_mismatch, "landmark bag has wrong dimension");
  return p.decoder.col(s0) + p.decoder.rightCols(p.feature_dim()) * bag;
}

inline double decoder_logprob(const OptionPolicySet& p, int s0, const Vector& bag, int c) {
  return log_softmax_at(decoder_logits(p, s0, bag), c);
}

/// Mean negative log-likelihood and its gradient with respect to the weights.
inline double decoder_nll(const OptionPolicySet& p, std::span<const DecoderSample> batch, Matrix* grad = nullptr) {
  if (batch.empty()) fail(ErrorCode::empty_input, "decoder batch is empty");
  if (grad != nullptr) *grad = Matrix::Zero(p.decoder.rows(), p.decoder.cols());
  double nll = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const auto& x : batch) {
    const Vector logits = decoder_logits(p, x.s0, x.bag);
    nll -= inv * log_softmax_at(logits, x.option);
    if (grad != nullptr) {
      Vector r = softmax(logits);
      r(x.option) -= 1.0;
      grad->col(x.s0) += inv * r;
      grad->rightCols(p.feature_dim()) += inv * r * x.bag.transpose();
    }
  }
  return nll;
}

/// `steps` gradient-descent steps on the batch NLL; returns the NLL before
/// the first step.
inline double decoder_update(OptionPolicySet& p, std::span<const DecoderSample> batch, double lr, int steps = 1) {
  Matrix grad;
  const double before = decoder_nll(p, batch, &grad);
  for (int k = 0; k < steps; ++k) {
    if (k > 0) decoder_nll(p, batch, &grad);
    p.decoder -= lr * grad;
  }
  if (!p.decoder.allFinite()) fail(ErrorCode::non_finite, "decoder weights diverged");
  return before;
}

// ---------------------------------------------------------------------------
// Information terms.

/// Single-trajectory estimate sum_t [log pi(a_t | s_t, c) - log(1/4)].
inline double kl_to_uniform(const TrajectoryRecord& rec, const OptionPolicySet& p) {
  double kl = 0.0;
  for (int t = 0; t < rec.horizon(); ++t)
    kl += p.action_logprob(rec.states[static_cast<std::size_t>(t)], rec.option, rec.actions[static_cast<std::size_t>(t)]) -
          std::log(1.0 / grid::kActionCount);
  return kl;
}

/// Sum of log pi(a_t | s_t, c) under the current parameters.
inline double policy_logprob(const TrajectoryRecord& rec, const OptionPolicySet& p) {
  double lp = 0.0;
  for (int t = 0; t < rec.horizon(); ++t)
    lp += p.action_logprob(rec.states[static_cast<std::size_t>(t)], rec.option, rec.actions[static_cast<std::size_t>(t)]);
  return lp;
}

/// H(C | S) with s0 uniform over `starts`.
inline double entropy_prior(const OptionPolicySet& p, const std::vector<int>& starts) {
  if (starts.empty()) fail(ErrorCode::empty_input, "no start states");
  double h = 0.0;
  for (int s0 : starts) {
    const Vector probs = p.prior_probs(s0);
    for (Eigen::Index c = 0; c < probs.size(); ++c)
      if (probs(c) > 0.0) h -= probs(c) * std::log(probs(c));
  }
  return h / static_cast<double>(starts.size());
}

// ---------------------------------------------------------------------------
// Q values.

struct ObjectiveWeights {
  double info = 1.0;  // weight on the decoder and option-entropy terms
  double beta = 1e-3;
  double alpha1 = 1e-4;
  double alpha2 = 1e-2;
  double alpha3 = 1e-2;
};

/// Per-trajectory ingredients of the policy Q value.
struct TrajectoryTerms {
  double p_dpp = 0.0;            // P(G | tau)
  double decoder_logprob = 0.0;  // log P_phi(c | s0, G)
  double log_pi = 0.0;           // sum_t log pi(a_t | s_t, c)
  double f = 0.0;                // coverage
};

/// The part of Q_m that depends on trajectory m alone.
inline double own_term(const TrajectoryTerms& t, const ObjectiveWeights& w, int m_count) {
  return (w.info * t.p_dpp * t.decoder_logprob - w.beta * t.log_pi + w.alpha1 * t.f) / m_count;
}

inline double q_policy_m(const TrajectoryTerms& t, double g, double h, const ObjectiveWeights& w, int m_count) {
  if (m_count < 1) fail(ErrorCode::invalid_argument, "M must be >= 1");
  return own_term(t, w, m_count) - w.alpha2 * g + w.alpha3 * h;
}

/// -log P_omega(c | s0) + sum_m Q_m.
inline double q_prior(double prior_logprob, std::span<const double> q_policy) {
  if (q_policy.empty()) fail(ErrorCode::empty_input, "q_prior needs the sibling Q values");
  double q = -prior_logprob;
  for (double x : q_policy) q += x;
  return q;
}

}  // namespace odpp::option
