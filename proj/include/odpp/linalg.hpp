#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "odpp/error.hpp"

namespace odpp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTol = 1e-9;

/// Largest |M_ij - M_ji|.
inline double max_asymmetry(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

struct Eigensystem {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values(i); orthonormal
};

namespace detail {

// Cyclic Jacobi sweeps on a dense symmetric matrix held in `a` (overwritten).
// When `v` is non-null the rotations are accumulated into it.
inline void jacobi_sweeps(Matrix& a, Matrix* v) {
  const Eigen::Index n = a.rows();
  if (n <= 1) return;
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index q = 1; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) return;

    for (Eigen::Index q = 1; q < n; ++q) {
      for (Eigen::Index p = 0; p < q; ++p) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Skip rotations that cannot change the diagonal in double precision.
        if (sweep > 3 && std::abs(apq) * 1e17 < std::abs(app) &&
            std::abs(apq) * 1e17 < std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // Column rotation (contiguous in column-major storage), then mirror.
        auto col_p = a.col(p);
        auto col_q = a.col(q);
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = col_p(k);
          const double akq = col_q(k);
          col_p(k) = c * akp - s * akq;
          col_q(k) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          a(p, k) = a(k, p);
          a(q, k) = a(k, q);
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;

        if (v != nullptr) {
          auto vp = v->col(p);
          auto vq = v->col(q);
          for (Eigen::Index k = 0; k < n; ++k) {
            const double x = vp(k);
            const double y = vq(k);
            vp(k) = c * x - s * y;
            vq(k) = s * x + c * y;
          }
        }
      }
    }
  }
}

inline void require_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    fail(ErrorCode::dimension_mismatch, std::string(who) + ": matrix is not square");
  const double asym = max_asymmetry(m);
  if (!(asym <= kSymmetryTol))
    fail(ErrorCode::not_symmetric,
         std::string(who) + ": asymmetry " + std::to_string(asym) + " exceeds 1e-9");
}

}  // namespace detail

/// Makes the largest-magnitude component of `v` positive. Ties within 1e-9
/// relative resolve to the lowest index.
inline void fix_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= vmax * (1.0 - 1e-9)) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; eigenvector signs follow fix_sign so the output is
/// deterministic.
inline Eigensystem symmetric_eigensystem(const Matrix& m) {
  detail::require_symmetric(m, "symmetric_eigensystem");
  const Eigen::Index n = m.rows();
  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  detail::jacobi_sweeps(a, &v);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  Eigensystem out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    out.vectors.col(k) = v.col(src);
    fix_sign(out.vectors.col(k));
  }
  return out;
}

/// Eigenvalues only (ascending); skips the rotation accumulation.
inline Vector symmetric_eigenvalues(const Matrix& m) {
  detail::require_symmetric(m, "symmetric_eigenvalues");
  Matrix a = 0.5 * (m + m.transpose());
  detail::jacobi_sweeps(a, nullptr);
  Vector d = a.diagonal();
  std::sort(d.data(), d.data() + d.size());
  return d;
}

/// Log-determinant by an unpivoted Cholesky factorization. Returns -inf when a
/// pivot falls to `rel_tol * max(1, max diagonal)` or below, which is how
/// singular-to-machine-precision PSD matrices are reported. The empty matrix
/// has determinant 1.
inline double cholesky_log_det(const Matrix& m, double rel_tol = 1e-12) {
  const Eigen::Index n = m.rows();
  if (n == 0) return 0.0;
  const double floor = rel_tol * std::max(1.0, m.diagonal().maxCoeff());
  Matrix l = Matrix::Zero(n, n);
  double log_det = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > floor)) return -std::numeric_limits<double>::infinity();
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    log_det += std::log(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return log_det;
}

/// Row-major text fixture: first line "rows cols", then one row per line with
/// 17 significant digits so values round-trip exactly.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  os << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      os << (j == 0 ? "" : " ") << buf;
    }
    os << '\n';
  }
}

inline Matrix read_matrix(std::istream& is) {
  long rows = -1;
  long cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0)
    fail(ErrorCode::parse_error, "matrix fixture: bad header");
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) fail(ErrorCode::parse_error, "matrix fixture: truncated body");
  return m;
}

}  // namespace odpp
