#pragma once

// Symmetric Kronecker product and sum.
//
// For A, B in R^{m x n}, skron(A, B) = W_m (A (x) B) W_n^T in R^{mbar x nbar}.
// The production path evaluates each entry from the closed-form indexing
// identity (four multiplies per entry); the m^2 x n^2 Kronecker product is
// never formed.

#include <Eigen/Dense>

#include <numbers>
#include <string>

#include "skron/error.hpp"
#include "skron/sym.hpp"

namespace skron {

namespace detail {

inline double skron_entry_unchecked(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                    const Eigen::Ref<const Eigen::MatrixXd>& B, Index ri,
                                    Index ci, Index rj, Index cj) {
  constexpr double h = std::numbers::sqrt2 / 2.0;
  const bool di = ri == ci;
  const bool dj = rj == cj;
  if (di && dj) return A(ri, rj) * B(ri, rj);
  if (di) return h * (A(ri, rj) * B(ri, cj) + A(ri, cj) * B(ri, rj));
  if (dj) return h * (A(ri, rj) * B(ci, rj) + A(ci, rj) * B(ri, rj));
  return 0.5 * (A(ri, rj) * B(ci, cj) + A(ri, cj) * B(ci, rj) + A(ci, rj) * B(ri, cj) +
                A(ci, cj) * B(ri, rj));
}

inline void require_same_shape(const Eigen::Ref<const Eigen::MatrixXd>& A,
                               const Eigen::Ref<const Eigen::MatrixXd>& B, const char* who) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() < 1 || A.cols() < 1)
    throw DimensionError(std::string(who) + ": operands must share a nonempty shape (" +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " vs " +
                         std::to_string(B.rows()) + "x" + std::to_string(B.cols()) + ")");
}

}  // namespace detail

/// Entry (i, j) of skron(A, B), 0-based, from the indexing identity.
inline double skron_entry(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& B, Index i, Index j,
                          const SymIndexScheme& rows_scheme, const SymIndexScheme& cols_scheme) {
  detail::require_same_shape(A, B, "skron_entry");
  if (rows_scheme.n() != A.rows() || cols_scheme.n() != A.cols())
    throw DimensionError("skron_entry: index schemes do not match operand shape");
  if (i < 0 || i >= rows_scheme.nbar() || j < 0 || j >= cols_scheme.nbar())
    throw DimensionError("skron_entry: index (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range");
  return detail::skron_entry_unchecked(A, B, rows_scheme.row(i), rows_scheme.col(i),
                                       cols_scheme.row(j), cols_scheme.col(j));
}

inline Eigen::MatrixXd skron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                             const Eigen::Ref<const Eigen::MatrixXd>& B) {
  detail::require_same_shape(A, B, "skron");
  const SymIndexScheme rs(A.rows());
  const SymIndexScheme cs(A.cols());
  Eigen::MatrixXd out(rs.nbar(), cs.nbar());
  for (Index j = 0; j < cs.nbar(); ++j) {
    const Index rj = cs.row(j);
    const Index cj = cs.col(j);
    for (Index i = 0; i < rs.nbar(); ++i)
      out(i, j) = detail::skron_entry_unchecked(A, B, rs.row(i), rs.col(i), rj, cj);
  }
  return out;
}

/// A (+)s B = skron(A, I) + skron(I, B) = skron(A + B, I).
inline Eigen::MatrixXd skron_sum(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                 const Eigen::Ref<const Eigen::MatrixXd>& B) {
  detail::require_same_shape(A, B, "skron_sum");
  if (A.rows() != A.cols()) throw DimensionError("skron_sum: operands must be square");
  const Eigen::MatrixXd sum = A + B;
  return skron(sum, Eigen::MatrixXd::Identity(A.rows(), A.cols()));
}

/// x^T (x)s y^T for column vectors x, y of length n: a row of length nbar
/// with entry j equal to svec(pi(x y^T))_j.
inline Eigen::RowVectorXd skron_rows(const Eigen::Ref<const Eigen::VectorXd>& x,
                                     const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != y.size() || x.size() < 1)
    throw DimensionError("skron_rows: vectors must share a nonzero length");
  const Index n = x.size();
  constexpr double h = std::numbers::sqrt2 / 2.0;
  Eigen::RowVectorXd out(tri(n));
  Index j = 0;
  for (Index r = 0; r < n; ++r)
    for (Index c = r; c < n; ++c)
      out(j++) = (r == c) ? x(r) * y(r) : h * (x(r) * y(c) + x(c) * y(r));
  return out;
}

}  // namespace skron
