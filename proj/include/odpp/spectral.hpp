#pragma once

// State-transition graphs, their Laplacian spectra and the per-state unit
// features derived from the D smallest eigenvectors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "odpp/error.hpp"
#include "odpp/linalg.hpp"
#include "odpp/random.hpp"

namespace odpp::spectral {

struct Transition {
  int state = 0;
  int action = 0;
  int next_state = 0;
};

/// Undirected simple graph over states 0..n-1.
class TransitionGraph {
 public:
  TransitionGraph() = default;
  TransitionGraph(int vertex_count, std::vector<std::pair<int, int>> edges)
      : n_(vertex_count), edges_(std::move(edges)), neighbors_(static_cast<std::size_t>(vertex_count)) {
    for (auto& [u, v] : edges_) {
      if (u > v) std::swap(u, v);
      if (u < 0 || v >= n_ || u == v)
        fail(ErrorCode::index_out_of_range, "edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (auto [u, v] : edges_) {
      neighbors_[static_cast<std::size_t>(u)].push_back(v);
      neighbors_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
  }

  int vertex_count() const noexcept { return n_; }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int v) const { return neighbors_[static_cast<std::size_t>(v)]; }
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  Matrix adjacency() const {
    Matrix a = Matrix::Zero(n_, n_);
    for (auto [u, v] : edges_) a(u, v) = a(v, u) = 1.0;
    return a;
  }

  Matrix degree_matrix() const {
    Matrix d = Matrix::Zero(n_, n_);
    for (int v = 0; v < n_; ++v) d(v, v) = degree(v);
    return d;
  }

  /// Component label per vertex, labels assigned in order of lowest member.
  std::vector<int> components() const {
    std::vector<int> label(static_cast<std::size_t>(n_), -1);
    int next = 0;
    for (int root = 0; root < n_; ++root) {
      if (label[static_cast<std::size_t>(root)] >= 0) continue;
      std::vector<int> stack{root};
      label[static_cast<std::size_t>(root)] = next;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : neighbors(v)) {
          if (label[static_cast<std::size_t>(w)] < 0) {
            label[static_cast<std::size_t>(w)] = next;
            stack.push_back(w);
          }
        }
      }
      ++next;
    }
    return label;
  }

  bool connected() const {
    const auto c = components();
    return std::all_of(c.begin(), c.end(), [](int x) { return x == 0; });
  }

  bool operator==(const TransitionGraph& o) const { return n_ == o.n_ && edges_ == o.edges_; }

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> neighbors_;
};

/// s and s' are adjacent iff some observed transition links them in either
/// direction. Self-transitions add no edge.
inline TransitionGraph build_graph(int vertex_count, const std::vector<Transition>& transitions) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(transitions.size());
  for (const auto& t : transitions) {
    if (t.state < 0 || t.state >= vertex_count || t.next_state < 0 || t.next_state >= vertex_count)
      fail(ErrorCode::index_out_of_range, "transition references state outside [0, " +
                                              std::to_string(vertex_count) + ")");
    if (t.state != t.next_state) edges.emplace_back(t.state, t.next_state);
  }
  return TransitionGraph(vertex_count, std::move(edges));
}

/// L = D - A, or D^{-1/2} L D^{-1/2} when `normalized`. Entries of the
/// unnormalized form are small integers, so row sums are exactly zero.
inline Matrix laplacian(const TransitionGraph& g, bool normalized = false) {
  const int n = g.vertex_count();
  Matrix l = g.degree_matrix() - g.adjacency();
  if (!normalized) return l;
  Vector inv_sqrt(n);
  for (int v = 0; v < n; ++v) {
    if (g.degree(v) == 0)
      fail(ErrorCode::isolated_vertex, "normalized Laplacian undefined: vertex " +
                                           std::to_string(v) + " has degree 0");
    inv_sqrt(v) = 1.0 / std::sqrt(static_cast<double>(g.degree(v)));
  }
  return inv_sqrt.asDiagonal() * l * inv_sqrt.asDiagonal();
}

/// The D smallest eigenpairs of a graph Laplacian.
struct LaplacianSpectrum {
  Vector values;   // ascending, length D
  Matrix vectors;  // |S| x D, orthonormal columns
  bool normalized = false;

  int dim() const noexcept { return static_cast<int>(values.size()); }
  int state_count() const noexcept { return static_cast<int>(vectors.rows()); }
};

inline LaplacianSpectrum spectrum(const Matrix& lap, int dim, bool normalized = false) {
  if (dim < 1 || dim > lap.rows())
    fail(ErrorCode::invalid_argument, "spectrum dimension " + std::to_string(dim) + " outside [1, " +
                                          std::to_string(lap.rows()) + "]");
  const auto es = symmetric_eigensystem(lap);
  return LaplacianSpectrum{es.values.head(dim), es.vectors.leftCols(dim), normalized};
}

/// Per-state unit feature vectors, one row per state.
class StateFeatureMap {
 public:
  StateFeatureMap() = default;
  explicit StateFeatureMap(Matrix rows) : rows_(std::move(rows)) {
    for (Eigen::Index s = 0; s < rows_.rows(); ++s)
      if (std::abs(rows_.row(s).norm() - 1.0) > 1e-9)
        fail(ErrorCode::not_normalized, "state feature " + std::to_string(s) + " is not unit length");
  }

  int state_count() const noexcept { return static_cast<int>(rows_.rows()); }
  int dim() const noexcept { return static_cast<int>(rows_.cols()); }
  const Matrix& rows() const noexcept { return rows_; }
  Vector operator[](int s) const { return rows_.row(s).transpose(); }

  /// Stacks the features of `states` (repeats allowed) as rows.
  Matrix gather(const std::vector<int>& states) const {
    Matrix out(static_cast<Eigen::Index>(states.size()), rows_.cols());
    for (std::size_t k = 0; k < states.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = rows_.row(states[k]);
    return out;
  }

 private:
  Matrix rows_;
};

namespace detail {

inline Vector normalize_raw(const Eigen::Ref<const Vector>& raw, int state) {
  const double norm = raw.norm();
  if (!(norm > 1e-12))
    fail(ErrorCode::zero_feature, "raw spectral feature of state " + std::to_string(state) + " is zero");
  return raw / norm;
}

}  // namespace detail

/// b(s) = [v_1(s), ..., v_D(s)] / ||[v_1(s), ..., v_D(s)]||.
inline Vector state_feature(const LaplacianSpectrum& spec, int s) {
  if (s < 0 || s >= spec.state_count())
    fail(ErrorCode::index_out_of_range, "state " + std::to_string(s));
  return detail::normalize_raw(spec.vectors.row(s).transpose(), s);
}

inline StateFeatureMap state_features(const LaplacianSpectrum& spec) {
  Matrix rows(spec.state_count(), spec.dim());
  for (int s = 0; s < spec.state_count(); ++s) rows.row(s) = state_feature(spec, s).transpose();
  return StateFeatureMap(std::move(rows));
}

/// Features for a possibly disconnected graph: each connected component gets
/// its own bottom-D spectrum (zero-padded when the component has fewer than D
/// vertices) under the global sign convention, then rows are normalized.
inline StateFeatureMap component_state_features(const TransitionGraph& g, int dim, bool normalized = false) {
  if (dim < 1) fail(ErrorCode::invalid_argument, "feature dimension must be >= 1");
  const int n = g.vertex_count();
  const auto label = g.components();
  const int count = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;
  Matrix raw = Matrix::Zero(n, dim);
  for (int c = 0; c < count; ++c) {
    std::vector<int> members;
    for (int v = 0; v < n; ++v)
      if (label[static_cast<std::size_t>(v)] == c) members.push_back(v);
    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (std::size_t k = 0; k < members.size(); ++k) local[static_cast<std::size_t>(members[k])] = static_cast<int>(k);
    std::vector<std::pair<int, int>> sub_edges;
    for (auto [u, v] : g.edges())
      if (label[static_cast<std::size_t>(u)] == c)
        sub_edges.emplace_back(local[static_cast<std::size_t>(u)], local[static_cast<std::size_t>(v)]);
    const TransitionGraph sub(static_cast<int>(members.size()), std::move(sub_edges));
    const int d = std::min(dim, sub.vertex_count());
    const auto spec = spectrum(laplacian(sub, normalized && sub.vertex_count() > 1), d, normalized);
    for (std::size_t k = 0; k < members.size(); ++k)
      raw.row(members[k]).head(d) = spec.vectors.row(static_cast<Eigen::Index>(k));
  }
  for (int v = 0; v < n; ++v) raw.row(v) = detail::normalize_raw(raw.row(v).transpose(), v).transpose();
  return StateFeatureMap(std::move(raw));
}

/// Eigenvector of the second-smallest eigenvalue. Refuses graphs whose
/// algebraic connectivity is zero (disconnected).
inline Vector fiedler(const LaplacianSpectrum& spec) {
  if (spec.dim() < 2) fail(ErrorCode::invalid_argument, "Fiedler vector needs a spectrum with D >= 2");
  if (!(spec.values(1) > 1e-8))
    fail(ErrorCode::disconnected_graph,
         "algebraic connectivity " + std::to_string(spec.values(1)) + " is zero: graph is disconnected");
  return spec.vectors.col(1);
}

// ---------------------------------------------------------------------------
// Spectral representation learning with a tabular parameterization. The loss
// is a weighted graph-drawing objective plus an orthonormality penalty:
//
//   G = 1/2 E_{(s,s')}[ sum_{l<=k} sum_{i<=l} (f_i(s) - f_i(s'))^2 ]
//   P = a E_{s,s'~rho}[ sum_{l<=k} sum_{i,j<=l} (f_i(s)f_j(s) - d_ij)(f_i(s')f_j(s') - d_ij) ]
//
// With s, s' drawn independently from rho, P collapses to
// a * sum_{i,j} w_{max(i,j)} (C_ij - d_ij)^2 with C = E_rho[f f^T], where
// w_m = k - m + 1 counts the nested sums that contain index m.

using StatePair = std::pair<int, int>;

struct SpectralLoss {
  double graph = 0.0;
  double penalty = 0.0;
  double total() const { return graph + penalty; }
};

/// Empirical endpoint distribution: each pair contributes half a count to
/// each of its two states.
inline Vector endpoint_distribution(int state_count, const std::vector<StatePair>& pairs) {
  if (pairs.empty()) fail(ErrorCode::empty_input, "transition sample is empty");
  Vector rho = Vector::Zero(state_count);
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= state_count || b >= state_count)
      fail(ErrorCode::index_out_of_range, "transition sample references unknown state");
    rho(a) += 0.5;
    rho(b) += 0.5;
  }
  return rho / static_cast<double>(pairs.size());
}

inline Vector nested_weights(int k) {
  Vector w(k);
  for (int i = 0; i < k; ++i) w(i) = k - i;
  return w;
}

/// Loss value and its analytic gradient with respect to the |S| x k table.
inline SpectralLoss spectral_loss(const Matrix& f, const std::vector<StatePair>& pairs,
                                  double penalty_weight, Matrix* grad = nullptr) {
  const auto n = static_cast<int>(f.rows());
  const auto k = static_cast<int>(f.cols());
  const Vector rho = endpoint_distribution(n, pairs);
  const Vector w = nested_weights(k);
  const double inv_t = 1.0 / static_cast<double>(pairs.size());

  SpectralLoss loss;
  if (grad != nullptr) *grad = Matrix::Zero(n, k);
  for (auto [a, b] : pairs) {
    const Vector diff = (f.row(a) - f.row(b)).transpose();
    loss.graph += 0.5 * inv_t * diff.cwiseProduct(diff).dot(w);
    if (grad != nullptr) {
      const Vector g = inv_t * w.cwiseProduct(diff);
      grad->row(a) += g.transpose();
      grad->row(b) -= g.transpose();
    }
  }

  const Matrix c = f.transpose() * rho.asDiagonal() * f;
  Matrix e = c - Matrix::Identity(k, k);
  Matrix wmax(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) wmax(i, j) = w(std::max(i, j));
  loss.penalty = penalty_weight * wmax.cwiseProduct(e).cwiseProduct(e).sum();
  if (grad != nullptr)
    *grad += 4.0 * penalty_weight * rho.asDiagonal() * f * wmax.cwiseProduct(e);
  if (!std::isfinite(loss.total())) fail(ErrorCode::non_finite, "spectral loss is not finite");
  return loss;
}

/// Closed-form stationary point of spectral_loss: f_i = sqrt(x_i) u_i where
/// (mu_i, u_i) solve M u = mu R u with M the empirical edge quadratic form,
/// R = Diag(rho), u^T R u = 1, and x_i = 1 - mu_i / (2a). Every state must
/// appear in the sample.
inline Matrix exact_spectral_minimizer(int state_count, const std::vector<StatePair>& pairs, int dim,
                                       double penalty_weight) {
  const Vector rho = endpoint_distribution(state_count, pairs);
  if ((rho.array() <= 0.0).any())
    fail(ErrorCode::invalid_argument, "every state must appear in the transition sample");
  Matrix m = Matrix::Zero(state_count, state_count);
  const double scale = 0.5 / static_cast<double>(pairs.size());
  for (auto [a, b] : pairs) {
    m(a, a) += scale;
    m(b, b) += scale;
    m(a, b) -= scale;
    m(b, a) -= scale;
  }
  const Vector r_inv_sqrt = rho.cwiseSqrt().cwiseInverse();
  const Matrix sym = r_inv_sqrt.asDiagonal() * m * r_inv_sqrt.asDiagonal();
  const auto es = symmetric_eigensystem(0.5 * (sym + sym.transpose()));
  Matrix f(state_count, dim);
  for (int i = 0; i < dim; ++i) {
    const double x = 1.0 - es.values(i) / (2.0 * penalty_weight);
    if (!(x > 0.0))
      fail(ErrorCode::invalid_argument, "penalty weight too small for an interior stationary point");
    f.col(i) = std::sqrt(x) * r_inv_sqrt.asDiagonal() * es.vectors.col(i);
  }
  return f;
}

struct LearnedSpectrum {
  Matrix raw;               // |S| x D learned table
  SpectralLoss final_loss;
  StateFeatureMap features() const {
    Matrix rows = raw;
    for (Eigen::Index s = 0; s < rows.rows(); ++s)
      rows.row(s) = detail::normalize_raw(rows.row(s).transpose(), static_cast<int>(s)).transpose();
    return StateFeatureMap(std::move(rows));
  }
};

struct SpectralSgdOptions {
  int dim = 1;
  double penalty_weight = 1.0;
  int steps = 5000;
  double step_size = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;
};

/// Minimizes spectral_loss by (mini-batch) gradient descent with heavy-ball
/// momentum. Parameters start as N(0, 1) draws from `seed`.
inline LearnedSpectrum learn_spectrum_sgd(int state_count, const std::vector<StatePair>& pairs,
                                          const SpectralSgdOptions& opt) {
  if (pairs.empty()) fail(ErrorCode::empty_input, "transition sample is empty");
  if (opt.dim < 1) fail(ErrorCode::invalid_argument, "dimension must be >= 1");
  Rng rng(opt.seed);
  Matrix f(state_count, opt.dim);
  for (int s = 0; s < state_count; ++s)
    for (int i = 0; i < opt.dim; ++i) f(s, i) = rng.normal();

  Matrix velocity = Matrix::Zero(state_count, opt.dim);
  Matrix grad;
  std::vector<StatePair> batch;
  const bool full = opt.batch_size == 0 || opt.batch_size >= pairs.size();
  for (int step = 0; step < opt.steps; ++step) {
    if (full) {
      spectral_loss(f, pairs, opt.penalty_weight, &grad);
    } else {
      batch.clear();
      for (std::size_t b = 0; b < opt.batch_size; ++b) batch.push_back(pairs[rng.index(pairs.size())]);
      spectral_loss(f, batch, opt.penalty_weight, &grad);
    }
    velocity = opt.momentum * velocity - opt.step_size * grad;
    f += velocity;
    if (!f.allFinite()) fail(ErrorCode::non_finite, "spectral SGD diverged");
  }
  return LearnedSpectrum{f, spectral_loss(f, pairs, opt.penalty_weight)};
}

// ---------------------------------------------------------------------------
// Text fixtures.

inline void write_graph(std::ostream& os, const TransitionGraph& g) {
  os << g.vertex_count() << ' ' << g.edges().size() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline TransitionGraph read_graph(std::istream& is) {
  int n = -1;
  long m = -1;
  if (!(is >> n >> m) || n < 0 || m < 0) fail(ErrorCode::parse_error, "graph fixture: bad header");
  std::vector<std::pair<int, int>> edges(static_cast<std::size_t>(m));
  for (auto& [u, v] : edges)
    if (!(is >> u >> v)) fail(ErrorCode::parse_error, "graph fixture: truncated edge list");
  return TransitionGraph(n, std::move(edges));
}

/// "odpp-spectrum 1", "states N", "dim D", "normalized 0|1", then one row
/// per eigenpair: the eigenvalue followed by the N eigenvector entries.
inline void write_spectrum(std::ostream& os, const LaplacianSpectrum& spec) {
  os << "odpp-spectrum 1\nstates " << spec.state_count() << "\ndim " << spec.dim() << "\nnormalized "
     << (spec.normalized ? 1 : 0) << '\n';
  char buf[64];
  for (int i = 0; i < spec.dim(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", spec.values(i));
    os << buf;
    for (int s = 0; s < spec.state_count(); ++s) {
      std::snprintf(buf, sizeof buf, "%.17g", spec.vectors(s, i));
      os << ' ' << buf;
    }
    os << '\n';
  }
}

inline LaplacianSpectrum read_spectrum(std::istream& is) {
  std::string tag;
  std::string key;
  int version = 0;
  int n = 0;
  int d = 0;
  int normalized = 0;
  if (!(is >> tag >> version) || tag != "odpp-spectrum" || version != 1)
    fail(ErrorCode::parse_error, "spectrum fixture: bad magic");
  if (!(is >> key >> n) || key != "states" || !(is >> key >> d) || key != "dim" ||
      !(is >> key >> normalized) || key != "normalized" || n < 1 || d < 1)
    fail(ErrorCode::parse_error, "spectrum fixture: bad header");
  LaplacianSpectrum spec{Vector(d), Matrix(n, d), normalized != 0};
  for (int i = 0; i < d; ++i) {
    if (!(is >> spec.values(i))) fail(ErrorCode::parse_error, "spectrum fixture: truncated");
    for (int s = 0; s < n; ++s)
      if (!(is >> spec.vectors(s, i))) fail(ErrorCode::parse_error, "spectrum fixture: truncated");
  }
  return spec;
}

/// 64-bit FNV-1a over the spectrum fixture text; identifies the feature
/// source a checkpoint was trained against.
inline std::uint64_t spectrum_hash(const LaplacianSpectrum& spec) {
  std::ostringstream os;
  write_spectrum(os, spec);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace odpp::spectral
