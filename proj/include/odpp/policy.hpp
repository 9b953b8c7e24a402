#pragma once

// Tabular softmax parameterizations of the option prior, the intra-option
// policies, the landmark decoder and the downstream option selector.

#include <cmath>
#include <string>

#include "odpp/error.hpp"
#include "odpp/gridworld.hpp"
#include "odpp/linalg.hpp"

namespace odpp::option {

/// Numerically stable softmax of a logit row.
inline Vector softmax(const Eigen::Ref<const Vector>& logits) {
  const double mx = logits.maxCoeff();
  Vector p = (logits.array() - mx).exp().matrix();
  return p / p.sum();
}

inline double log_softmax_at(const Eigen::Ref<const Vector>& logits, Eigen::Index k) {
  const double mx = logits.maxCoeff();
  return logits(k) - mx - std::log((logits.array() - mx).exp().sum());
}

class OptionPolicySet {
 public:
  OptionPolicySet() = default;
  /// All logits and decoder weights start at zero: uniform prior, uniform
  /// actions, uniform decoder and selector.
  OptionPolicySet(int states, int options, int feature_dim)
      : states_(states),
        options_(options),
        feature_dim_(feature_dim),
        prior(Matrix::Zero(states, options)),
        policy(Matrix::Zero(static_cast<Eigen::Index>(states) * options, grid::kActionCount)),
        decoder(Matrix::Zero(options, states + feature_dim)),
        selector(Matrix::Zero(states, options)) {
    if (states < 1 || options < 1 || feature_dim < 1)
      fail(ErrorCode::invalid_argument, "policy set needs at least one state, option and feature");
  }

  int states() const noexcept { return states_; }
  int options() const noexcept { return options_; }
  int feature_dim() const noexcept { return feature_dim_; }

  Eigen::Index policy_row(int s, int c) const { return static_cast<Eigen::Index>(s) * options_ + c; }

  Vector prior_probs(int s0) const { return softmax(prior.row(s0).transpose()); }
  double prior_logprob(int s0, int c) const { return log_softmax_at(prior.row(s0).transpose(), c); }

  grid::ActionProbs action_probs(int s, int c) const {
    const Vector p = softmax(policy.row(policy_row(s, c)).transpose());
    return {p(0), p(1), p(2), p(3)};
  }
  double action_logprob(int s, int c, int a) const {
    return log_softmax_at(policy.row(policy_row(s, c)).transpose(), a);
  }

  Vector selector_probs(int s) const { return softmax(selector.row(s).transpose()); }

  bool all_finite() const {
    return prior.allFinite() && policy.allFinite() && decoder.allFinite() && selector.allFinite();
  }

  bool operator==(const OptionPolicySet& o) const {
    return states_ == o.states_ && options_ == o.options_ && feature_dim_ == o.feature_dim_ &&
           prior == o.prior && policy == o.policy && decoder == o.decoder && selector == o.selector;
  }

 private:
  int states_ = 0;
  int options_ = 0;
  int feature_dim_ = 0;

 public:
  Matrix prior;     // states x options
  Matrix policy;    // (states * options) x actions, row s * options + c
  Matrix decoder;   // options x (states + feature_dim)
  Matrix selector;  // states x options
};

}  // namespace odpp::option
