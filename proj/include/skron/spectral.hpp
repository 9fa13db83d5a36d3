#pragma once

// Spectral and exponential identities of the symmetric Kronecker algebra,
// checked numerically in real arithmetic.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "skron/kron.hpp"

namespace skron {

using ComplexVector = std::vector<std::complex<double>>;

/// Outcome of a numerical identity check: pass/fail plus the observed
/// deviation that decided it.
struct CheckResult {
  bool ok = false;
  double deviation = std::numeric_limits<double>::infinity();
  explicit operator bool() const { return ok; }
};

inline ComplexVector eigenvalues(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != A.cols()) throw DimensionError("eigenvalues: matrix is not square");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalues: QR iteration failed");
  ComplexVector out(static_cast<std::size_t>(A.rows()));
  for (Index i = 0; i < A.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
  return out;
}

/// Largest real part of the spectrum.
inline double spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& l : eigenvalues(A)) m = std::max(m, l.real());
  return m;
}

/// Compare two eigenvalue multisets. Both are sorted lexicographically by
/// (re, im); each element of `a` is then matched greedily to the nearest
/// unmatched element of `b`. The deviation is the worst matched distance
/// divided by max(1, largest modulus).
inline CheckResult match_multisets(ComplexVector a, ComplexVector b, double rel_tol) {
  if (a.size() != b.size()) return {false, std::numeric_limits<double>::infinity()};
  const auto lex = [](const std::complex<double>& x, const std::complex<double>& y) {
    return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
  };
  std::sort(a.begin(), a.end(), lex);
  std::sort(b.begin(), b.end(), lex);
  double scale = 1.0;
  for (const auto& x : a) scale = std::max(scale, std::abs(x));
  for (const auto& x : b) scale = std::max(scale, std::abs(x));

  std::vector<bool> used(b.size(), false);
  double worst = 0.0;
  for (const auto& x : a) {
    std::size_t best = b.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(x - b[k]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    used[best] = true;
    worst = std::max(worst, best_d / scale);
  }
  return {worst <= rel_tol, worst};
}

inline Eigen::MatrixXd expm(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  if (A.rows() != A.cols()) throw DimensionError("expm: matrix is not square");
  Eigen::MatrixXd M = A;
  return M.exp();
}

/// sigma(skron(A, A)) == { l_i l_j : i <= j } as multisets.
inline CheckResult spectrum_check_skron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                        double rel_tol = 1e-8) {
  const ComplexVector l = eigenvalues(A);
  ComplexVector expected;
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i; j < l.size(); ++j) expected.push_back(l[i] * l[j]);
  return match_multisets(eigenvalues(skron(A, A)), std::move(expected), rel_tol);
}

/// sigma(A (+)s A) == { l_i + l_j : i <= j } as multisets.
inline CheckResult spectrum_check_skron_sum(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                            double rel_tol = 1e-8) {
  const ComplexVector l = eigenvalues(A);
  ComplexVector expected;
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i; j < l.size(); ++j) expected.push_back(l[i] + l[j]);
  return match_multisets(eigenvalues(skron_sum(A, A)), std::move(expected), rel_tol);
}

/// (A (x)s I)^k == 2^-k sum_i C(k,i) A^{k-i} (x)s A^i.
inline CheckResult skron_pow_identity_check(const Eigen::Ref<const Eigen::MatrixXd>& A, int k,
                                            double tol = 1e-10) {
  if (k < 0) throw DimensionError("skron_pow_identity_check: k must be >= 0");
  const Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd AsI = skron(A, I);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(tri(n), tri(n));
  for (int i = 0; i < k; ++i) lhs = lhs * AsI;

  std::vector<Eigen::MatrixXd> powers{I};
  for (int i = 1; i <= k; ++i) powers.push_back(powers.back() * A);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(tri(n), tri(n));
  double binom = 1.0;
  for (int i = 0; i <= k; ++i) {
    rhs += binom * skron(powers[static_cast<std::size_t>(k - i)], powers[static_cast<std::size_t>(i)]);
    binom = binom * (k - i) / (i + 1);
  }
  rhs /= std::ldexp(1.0, k);
  const double scale = std::max(1.0, lhs.norm());
  const double dev = (lhs - rhs).norm() / scale;
  return {dev <= tol, dev};
}

/// ||exp(A (+)s B) - exp(A) (x)s exp(B)||, relative to max(1, ||lhs||).
inline double skron_exp_gap(const Eigen::Ref<const Eigen::MatrixXd>& A,
                            const Eigen::Ref<const Eigen::MatrixXd>& B) {
  const Eigen::MatrixXd lhs = expm(skron_sum(A, B));
  const Eigen::MatrixXd rhs = skron(expm(A), expm(B));
  return (lhs - rhs).norm() / std::max(1.0, lhs.norm());
}

/// exp(A (+)s A) == exp(A) (x)s exp(A).
inline CheckResult skron_exp_identity_check(const Eigen::Ref<const Eigen::MatrixXd>& A,
                                            double tol = 1e-9) {
  const double dev = skron_exp_gap(A, A);
  return {dev <= tol, dev};
}

}  // namespace skron
