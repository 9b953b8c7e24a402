#pragma once

// Brute-force references used only by tests. Nothing here calls into the
// eigen-decomposition or greedy code paths it is used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "odpp/random.hpp"

namespace odpp::oracle {

using Matrix = Eigen::MatrixXd;

/// Determinant by Gaussian elimination with partial pivoting.
inline double det(Matrix a) {
  const Eigen::Index n = a.rows();
  double d = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      d = -d;
    }
    d *= a(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
    }
  }
  return d;
}

inline Matrix submatrix(const Matrix& m, unsigned mask) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (mask & (1u << i)) idx.push_back(i);
  Matrix s(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = m(idx[a], idx[b]);
  return s;
}

inline double subset_det(const Matrix& m, unsigned mask) {
  if (mask == 0) return 1.0;
  return det(submatrix(m, mask));
}

/// sum over all 2^N subsets of det(L_W).
inline double subset_det_sum(const Matrix& l) {
  double s = 0.0;
  for (unsigned mask = 0; mask < (1u << l.rows()); ++mask) s += subset_det(l, mask);
  return s;
}

/// sum_W |W| det(L_W) / sum_W det(L_W).
inline double brute_expected_cardinality(const Matrix& l) {
  double num = 0.0;
  double den = 0.0;
  for (unsigned mask = 0; mask < (1u << l.rows()); ++mask) {
    const double d = subset_det(l, mask);
    num += static_cast<double>(__builtin_popcount(mask)) * d;
    den += d;
  }
  return num / den;
}

/// Best nonempty subset of size <= max_size by exhaustive search (lowest mask
/// wins ties). Returns the bitmask.
inline unsigned brute_map(const Matrix& l, int max_size) {
  unsigned best = 0;
  double best_det = -std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << l.rows()); ++mask) {
    if (__builtin_popcount(mask) > max_size) continue;
    const double d = subset_det(l, mask);
    if (d > best_det) {
      best_det = d;
      best = mask;
    }
  }
  return best;
}

/// Random PSD matrix B^T B with B of shape r x n, entries ~ N(0, scale).
inline Matrix random_psd(Rng& rng, int n, int rank, double scale = 1.0) {
  Matrix b(rank, n);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = scale * rng.normal();
  Matrix l = b.transpose() * b;
  return 0.5 * (l + l.transpose());
}

/// Random orthonormal columns (n x k) by Gram-Schmidt on Gaussian vectors.
inline Matrix random_orthonormal(Rng& rng, int n, int k) {
  Matrix q(n, k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    for (int p = 0; p < j; ++p) v -= q.col(p).dot(v) * q.col(p);
    q.col(j) = v.normalized();
  }
  return q;
}


/// Largest principal angle (radians) between the column spans of a and b,
/// via Householder QR and an SVD of the basis overlap.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  const double smallest = std::min(1.0, svd.singularValues().minCoeff());
  return std::acos(smallest);
}

}  // namespace odpp::oracle
