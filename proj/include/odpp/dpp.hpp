#pragma once

// Determinantal point process primitives: Gram kernels, subset likelihood,
// expected cardinality and fast greedy MAP inference.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "odpp/error.hpp"
#include "odpp/linalg.hpp"

namespace odpp::dpp {

inline constexpr double kNormTol = 1e-9;
inline constexpr double kPsdTol = 1e-8;

/// Nonnegative per-item quality.
class QualityVector {
 public:
  QualityVector() = default;
  explicit QualityVector(std::vector<double> values) : values_(std::move(values)) {
    for (double q : values_)
      if (!(q >= 0.0) || !std::isfinite(q))
        fail(ErrorCode::invalid_argument, "quality entries must be finite and >= 0");
  }

  static QualityVector ones(std::size_t n) { return QualityVector(std::vector<double>(n, 1.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
};

/// D x N matrix whose columns are item feature vectors.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(Matrix columns, bool normalized)
      : columns_(std::move(columns)), normalized_(normalized) {
    if (!columns_.allFinite()) fail(ErrorCode::non_finite, "feature matrix has non-finite entries");
    if (normalized_) {
      for (Eigen::Index j = 0; j < columns_.cols(); ++j) {
        const double norm = columns_.col(j).norm();
        if (std::abs(norm - 1.0) > kNormTol)
          fail(ErrorCode::not_normalized,
               "feature column " + std::to_string(j) + " has norm " + std::to_string(norm));
      }
    }
  }

  /// Normalizes each column; zero columns are rejected.
  static FeatureMatrix normalize(Matrix columns) {
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
      const double norm = columns.col(j).norm();
      if (!(norm > 0.0))
        fail(ErrorCode::zero_feature, "cannot normalize zero column " + std::to_string(j));
      columns.col(j) /= norm;
    }
    return FeatureMatrix(std::move(columns), true);
  }

  Eigen::Index dim() const noexcept { return columns_.rows(); }
  Eigen::Index count() const noexcept { return columns_.cols(); }
  bool normalized() const noexcept { return normalized_; }
  const Matrix& columns() const noexcept { return columns_; }

 private:
  Matrix columns_;
  bool normalized_ = false;
};

/// Symmetric PSD similarity matrix L of a DPP.
class KernelMatrix {
 public:
  KernelMatrix() = default;

  /// Validates symmetry (1e-9) and positive semidefiniteness
  /// (lambda_min >= -1e-8 * max(1, lambda_max)).
  static KernelMatrix from_matrix(Matrix m) {
    detail::require_symmetric(m, "KernelMatrix");
    if (!m.allFinite()) fail(ErrorCode::non_finite, "kernel has non-finite entries");
    if (m.rows() > 0) {
      const Vector ev = symmetric_eigenvalues(m);
      const double scale = std::max(1.0, ev(ev.size() - 1));
      if (ev(0) < -kPsdTol * scale)
        fail(ErrorCode::not_psd, "kernel smallest eigenvalue " + std::to_string(ev(0)));
    }
    return KernelMatrix(std::move(m));
  }

  /// Skips validation; for matrices that are PSD by construction.
  static KernelMatrix trusted(Matrix m) { return KernelMatrix(std::move(m)); }

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  explicit KernelMatrix(Matrix m) : entries_(std::move(m)) {}
  Matrix entries_;
};

/// Strictly increasing item indices.
class ItemSubset {
 public:
  ItemSubset() = default;
  explicit ItemSubset(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    for (std::size_t k = 1; k < indices_.size(); ++k)
      if (indices_[k] <= indices_[k - 1])
        fail(ErrorCode::invalid_argument, "subset indices must be strictly increasing");
  }

  /// Sorts and rejects duplicates.
  static ItemSubset from_unordered(std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    return ItemSubset(std::move(indices));
  }

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }
  bool operator==(const ItemSubset&) const = default;

  void check_bounds(std::size_t n) const {
    if (!indices_.empty() && indices_.back() >= n)
      fail(ErrorCode::index_out_of_range,
           "subset index " + std::to_string(indices_.back()) + " >= " + std::to_string(n));
  }

 private:
  std::vector<std::size_t> indices_;
};

/// L = Diag(q) B^T B Diag(q).
inline KernelMatrix build_kernel(const QualityVector& q, const FeatureMatrix& b) {
  if (static_cast<Eigen::Index>(q.size()) != b.count())
    fail(ErrorCode::dimension_mismatch, "quality length " + std::to_string(q.size()) +
                                            " != feature count " + std::to_string(b.count()));
  if (!b.normalized()) fail(ErrorCode::not_normalized, "build_kernel requires normalized features");
  const Eigen::Map<const Vector> qv(q.values().data(), static_cast<Eigen::Index>(q.size()));
  Matrix l = b.columns().transpose() * b.columns();
  l = qv.asDiagonal() * l * qv.asDiagonal();
  // Exact symmetry regardless of GEMM summation order.
  l = 0.5 * (l + l.transpose()).eval();
  return KernelMatrix::trusted(std::move(l));
}

/// Unit-quality kernel from row-stacked unit features (one item per row).
inline KernelMatrix gram_kernel_rows(const Matrix& rows) {
  Matrix l = rows * rows.transpose();
  l = 0.5 * (l + l.transpose()).eval();
  return KernelMatrix::trusted(std::move(l));
}

inline Matrix principal_submatrix(const Matrix& m, std::span<const std::size_t> idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix sub(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      sub(a, b) = m(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]));
  return sub;
}

/// log det(L + I).
inline double log_normalizer(const KernelMatrix& l) {
  const auto n = static_cast<Eigen::Index>(l.size());
  return cholesky_log_det(l.entries() + Matrix::Identity(n, n), 0.0);
}

/// log P(W) = log det(L_W) - log det(L + I). A singular L_W yields -inf.
inline double dpp_log_likelihood(const KernelMatrix& l, const ItemSubset& w) {
  w.check_bounds(l.size());
  const double num = cholesky_log_det(principal_submatrix(l.entries(), w.indices()));
  if (num == -std::numeric_limits<double>::infinity()) return num;
  return num - log_normalizer(l);
}

/// Eigenvalues of L with roundoff negatives in [-1e-8 * scale, 0) clamped to 0.
inline Vector clamped_eigenvalues(const KernelMatrix& l) {
  if (l.size() == 0) return Vector();
  Vector ev = symmetric_eigenvalues(l.entries());
  const double scale = std::max(1.0, ev(ev.size() - 1));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      if (ev(i) < -kPsdTol * scale)
        fail(ErrorCode::not_psd, "kernel eigenvalue " + std::to_string(ev(i)) + " below tolerance");
      ev(i) = 0.0;
    }
  }
  return ev;
}

/// E|W| = sum_i lambda_i / (lambda_i + 1).
inline double expected_cardinality(const KernelMatrix& l) {
  const Vector ev = clamped_eigenvalues(l);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) sum += ev(i) / (ev(i) + 1.0);
  return sum;
}

/// E|W| = N - tr((L + I)^{-1}) from one Cholesky factorization; agrees with
/// the eigenvalue route and is cheaper when only the scalar is needed.
inline double expected_cardinality_trace(const KernelMatrix& l) {
  const auto n = static_cast<Eigen::Index>(l.size());
  if (n == 0) return 0.0;
  const Eigen::LLT<Matrix> llt(l.entries() + Matrix::Identity(n, n));
  if (llt.info() != Eigen::Success) fail(ErrorCode::not_psd, "L + I is not positive definite");
  return static_cast<double>(n) - llt.solve(Matrix::Identity(n, n)).trace();
}

/// Expected cardinality of the DPP restricted to every item set with one item
/// removed: out[m] = E|W| for L with row/column m deleted. Uses
/// E|W| = N - tr((L+I)^{-1}) and the Schur-complement identity for the inverse
/// of a principal submatrix, so all N values cost one factorization.
inline std::vector<double> expected_cardinality_leave_one_out(const KernelMatrix& l) {
  const auto n = static_cast<Eigen::Index>(l.size());
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (n <= 1) return out;
  const Matrix inv = (l.entries() + Matrix::Identity(n, n)).llt().solve(Matrix::Identity(n, n));
  const double trace = inv.trace();
  for (Eigen::Index m = 0; m < n; ++m) {
    const double trace_minus = trace - inv.col(m).squaredNorm() / inv(m, m);
    out[static_cast<std::size_t>(m)] = static_cast<double>(n - 1) - trace_minus;
  }
  return out;
}

enum class StopRule {
  negative_gain,     // stop when the best marginal gain is < 0
  nonpositive_gain,  // stop when the best marginal gain is <= 0
  degenerate,        // stop only when the best candidate is linearly dependent
};

struct GreedyTrace {
  std::vector<std::size_t> order;  // selection order
  std::vector<double> gains;       // log d_j^2 at each selection
  ItemSubset subset() const { return ItemSubset::from_unordered(order); }
};

/// Fast greedy MAP inference with incremental Cholesky updates, O(S^2 N).
/// The first item is always taken (unless every diagonal entry is
/// degenerate); afterwards the loop ends when `max_size` items are chosen or
/// the stopping rule fires, whichever comes first. Ties go to the lowest index.
inline GreedyTrace greedy_map_trace(const KernelMatrix& l, std::size_t max_size, StopRule rule,
                                    double degenerate_tol = 1e-10) {
  const std::size_t n = l.size();
  if (max_size < 1 || max_size > n)
    fail(ErrorCode::invalid_argument,
         "max_size " + std::to_string(max_size) + " outside [1, " + std::to_string(n) + "]");
  const Matrix& k = l.entries();
  const double floor = degenerate_tol * std::max(1.0, k.diagonal().maxCoeff());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  std::vector<bool> taken(n, false);
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(max_size), static_cast<Eigen::Index>(n));

  auto gain_of = [&](std::size_t i) {
    return d2[i] > floor ? std::log(d2[i]) : -std::numeric_limits<double>::infinity();
  };
  auto best_candidate = [&]() {
    std::size_t best = n;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double g = gain_of(i);
      if (best == n || g > best_gain) {
        best = i;
        best_gain = g;
      }
    }
    return std::pair{best, best_gain};
  };

  GreedyTrace trace;
  auto [j, gain] = best_candidate();
  if (gain == -std::numeric_limits<double>::infinity()) return trace;

  while (true) {
    taken[j] = true;
    trace.order.push_back(j);
    trace.gains.push_back(gain);
    if (trace.order.size() == max_size) break;

    const auto step = static_cast<Eigen::Index>(trace.order.size() - 1);
    const auto jj = static_cast<Eigen::Index>(j);
    const double dj = std::sqrt(d2[j]);
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double e = (k(jj, ii) - c.col(jj).head(step).dot(c.col(ii).head(step))) / dj;
      c(step, ii) = e;
      d2[i] -= e * e;
    }

    std::tie(j, gain) = best_candidate();
    if (j == n) break;
    if (gain == -std::numeric_limits<double>::infinity()) break;
    if (rule == StopRule::negative_gain && gain < 0.0) break;
    if (rule == StopRule::nonpositive_gain && gain <= 0.0) break;
  }
  return trace;
}

/// Greedy MAP with the negative-gain stopping rule; `stop_on_nonpositive_gain`
/// also stops at a zero gain, which keeps exact duplicates out of the result.
inline ItemSubset greedy_map(const KernelMatrix& l, std::size_t max_size,
                             bool stop_on_nonpositive_gain) {
  return greedy_map_trace(l, max_size,
                          stop_on_nonpositive_gain ? StopRule::nonpositive_gain
                                                   : StopRule::negative_gain)
      .subset();
}

}  // namespace odpp::dpp
