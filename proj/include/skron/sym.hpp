#pragma once

// Symmetric-matrix space S^n: index maps, orthonormal basis, svec/smat.
//
// All indices are 0-based. The basis order is the row-wise upper triangle
// (0,0),(0,1),...,(0,n-1),(1,1),...,(n-1,n-1); every svec layout in the
// library uses this single order.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "skron/error.hpp"

namespace skron {

using Index = Eigen::Index;

/// n(n+1)/2
constexpr Index tri(Index n) { return n * (n + 1) / 2; }

/// Inverse of tri(); returns -1 when `nbar` is not a triangular number.
inline Index tri_root(Index nbar) {
  if (nbar < 0) return -1;
  Index n = static_cast<Index>(
      std::floor((std::sqrt(8.0 * static_cast<double>(nbar) + 1.0) - 1.0) / 2.0));
  while (tri(n) < nbar) ++n;
  while (n > 0 && tri(n) > nbar) --n;
  return tri(n) == nbar ? n : -1;
}

/// Row/column/offset maps between a linear basis index j in [0, nbar) and
/// the upper-triangle position (row(j), col(j)).
class SymIndexScheme {
 public:
  explicit SymIndexScheme(Index n) : n_(n) {
    if (n < 1) throw DimensionError("SymIndexScheme: dimension must be >= 1");
    offset_.resize(static_cast<std::size_t>(n) + 1);
    offset_[0] = 0;
    for (Index p = 1; p <= n; ++p)
      offset_[static_cast<std::size_t>(p)] = offset_[static_cast<std::size_t>(p - 1)] + (n - (p - 1));
    rows_.reserve(static_cast<std::size_t>(tri(n)));
    cols_.reserve(static_cast<std::size_t>(tri(n)));
    for (Index r = 0; r < n; ++r)
      for (Index c = r; c < n; ++c) {
        rows_.push_back(r);
        cols_.push_back(c);
      }
  }

  Index n() const { return n_; }
  Index nbar() const { return tri(n_); }

  /// Number of basis elements in the first p rows of the upper triangle;
  /// offset(0) == 0, offset(n) == nbar.
  Index offset(Index p) const { return offset_.at(static_cast<std::size_t>(p)); }
  Index row(Index j) const { return rows_.at(static_cast<std::size_t>(j)); }
  Index col(Index j) const { return cols_.at(static_cast<std::size_t>(j)); }
  bool diagonal(Index j) const { return row(j) == col(j); }

  /// Linear index of position (r, c); the pair is ordered so r <= c.
  Index index(Index r, Index c) const {
    if (r > c) std::swap(r, c);
    if (r < 0 || c >= n_) throw DimensionError("SymIndexScheme::index out of range");
    return offset(r) + (c - r);
  }

 private:
  Index n_;
  std::vector<Index> offset_;
  std::vector<Index> rows_;
  std::vector<Index> cols_;
};

/// Real symmetric matrix. Only the upper triangle of the input is read, so
/// exact symmetry holds by construction.
class SymMatrix {
 public:
  SymMatrix() = default;

  explicit SymMatrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    if (m.rows() != m.cols()) throw DimensionError("SymMatrix: input is not square");
    m_ = m.triangularView<Eigen::Upper>();
    m_.triangularView<Eigen::StrictlyLower>() = m_.transpose();
  }

  static SymMatrix zero(Index n) { return SymMatrix(Eigen::MatrixXd::Zero(n, n)); }
  static SymMatrix identity(Index n) { return SymMatrix(Eigen::MatrixXd::Identity(n, n)); }

  Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    return SymMatrix(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.m_); }
  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

/// Length-nbar symmetric vectorization of a SymMatrix.
class SvecVector {
 public:
  SvecVector() = default;
  explicit SvecVector(Eigen::VectorXd v) : v_(std::move(v)) {
    if (tri_root(v_.size()) < 1)
      throw DimensionError("SvecVector: length " + std::to_string(v_.size()) +
                           " is not a triangular number");
  }

  Index nbar() const { return v_.size(); }
  Index dim() const { return tri_root(v_.size()); }
  const Eigen::VectorXd& values() const { return v_; }
  double operator[](Index j) const { return v_(j); }

 private:
  Eigen::VectorXd v_;
};

/// Orthonormal basis {E_j} of (S^n, <.,.>_F) and the nbar x n^2 matrix W whose
/// rows are vec(E_j)^T.
struct SymBasis {
  SymIndexScheme scheme;
  std::vector<Eigen::MatrixXd> elements;
  Eigen::MatrixXd W;

  explicit SymBasis(Index n) : scheme(n) {
    const Index nb = scheme.nbar();
    elements.reserve(static_cast<std::size_t>(nb));
    W.resize(nb, n * n);
    for (Index j = 0; j < nb; ++j) {
      const Index r = scheme.row(j);
      const Index c = scheme.col(j);
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
      if (r == c) {
        E(r, r) = 1.0;
      } else {
        E(r, c) = E(c, r) = std::numbers::sqrt2 / 2.0;
      }
      W.row(j) = E.reshaped().transpose();
      elements.push_back(std::move(E));
    }
  }
};

inline SvecVector svec(const SymMatrix& P) {
  const Index n = P.dim();
  Eigen::VectorXd v(tri(n));
  Index j = 0;
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) v(j++) = (r == c) ? P(r, r) : std::numbers::sqrt2 * P(r, c);
  return SvecVector(std::move(v));
}

inline SymMatrix smat(const SvecVector& v) {
  const Index n = v.dim();
  Eigen::MatrixXd P(n, n);
  Index j = 0;
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c) {
      const double x = (r == c) ? v[j] : v[j] / std::numbers::sqrt2;
      P(r, c) = x;
      P(c, r) = x;
      ++j;
    }
  return SymMatrix(P);
}

/// smat on a raw vector; throws DimensionError for non-triangular lengths.
inline SymMatrix smat(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return smat(SvecVector(Eigen::VectorXd(v)));
}

/// Orthogonal projection (A + A^T)/2 onto S^n.
inline SymMatrix sym_project(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != A.cols()) throw DimensionError("sym_project: input is not square");
  return SymMatrix(0.5 * (A + A.transpose()));
}

/// Largest entrywise distance between same-shape matrices in units in the
/// last place of the larger entry. Off-diagonal svec/smat round trips scale
/// by sqrt(2) and back, which is exact only to one ulp.
inline double ulp_distance(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (Index c = 0; c < A.cols(); ++c)
    for (Index r = 0; r < A.rows(); ++r) {
      const double a = A(r, c), b = B(r, c);
      if (a == b) continue;
      const double big = std::max(std::abs(a), std::abs(b));
      const double ulp = std::nextafter(big, std::numeric_limits<double>::infinity()) - big;
      worst = std::max(worst, std::abs(a - b) / ulp);
    }
  return worst;
}

/// Largest |A - A^T| entry; used where a computed matrix should be symmetric.
inline double asymmetry(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  return (A - A.transpose()).cwiseAbs().maxCoeff();
}

}  // namespace skron
