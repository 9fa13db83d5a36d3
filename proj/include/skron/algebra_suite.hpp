#pragma once

// Randomized property suite for the symmetric Kronecker algebra, checked
// against an independent dense route W_m (A (x) B) W_n^T.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "skron/spectral.hpp"

namespace skron {

namespace oracle {

/// Standard Kronecker product by explicit loops.
inline Eigen::MatrixXd kron(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      for (Index k = 0; k < B.rows(); ++k)
        for (Index l = 0; l < B.cols(); ++l) K(i * B.rows() + k, j * B.cols() + l) = A(i, j) * B(k, l);
  return K;
}

/// Column-stacking vectorization.
inline Eigen::VectorXd vec(const Eigen::MatrixXd& M) {
  Eigen::VectorXd v(M.size());
  for (Index c = 0; c < M.cols(); ++c)
    for (Index r = 0; r < M.rows(); ++r) v(c * M.rows() + r) = M(r, c);
  return v;
}

/// Kronecker sum A (+) B = A (x) I + I (x) B.
inline Eigen::MatrixXd kron_sum(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  return kron(A, Eigen::MatrixXd::Identity(B.rows(), B.rows())) +
         kron(Eigen::MatrixXd::Identity(A.rows(), A.rows()), B);
}

/// W_m (A (x) B) W_n^T.
inline Eigen::MatrixXd skron_dense(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  detail::require_dims(A.rows() == B.rows() && A.cols() == B.cols(), "skron_dense: shape mismatch");
  const SymBasis bm(A.rows()), bn(A.cols());
  return bm.W * kron(A, B) * bn.W.transpose();
}

}  // namespace oracle

struct PropertyTally {
  std::string name;
  long passed = 0;
  long failed = 0;
  double worst = 0.0;  // largest observed deviation
  double tol = 0.0;
};

struct AlgebraSuiteOptions {
  int cases = 1000;
  std::uint64_t seed = 20240601;
  Index max_dim = 5;
  /// Multiplies every tolerance (CLI override).
  double tol_scale = 1.0;
};

struct AlgebraSuiteResult {
  std::vector<PropertyTally> properties;
  int cases = 0;

  bool ok() const {
    for (const auto& p : properties)
      if (p.failed > 0) return false;
    return !properties.empty();
  }
};

namespace detail {

class Tallies {
 public:
  explicit Tallies(double scale) : scale_(scale) {}

  /// Record a deviation against `tol`; returns pass/fail.
  bool check(const std::string& name, double deviation, double tol) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      it = index_.emplace(name, out_.size()).first;
      out_.push_back({name, 0, 0, 0.0, tol * scale_});
    }
    PropertyTally& t = out_[it->second];
    const bool ok = std::isfinite(deviation) && deviation <= tol * scale_;
    (ok ? t.passed : t.failed) += 1;
    if (!std::isfinite(deviation) || deviation > t.worst) t.worst = deviation;
    return ok;
  }
  bool expect(const std::string& name, bool ok) { return check(name, ok ? 0.0 : 1.0, 0.5); }

  std::vector<PropertyTally> take() { return std::move(out_); }

 private:
  double scale_;
  std::map<std::string, std::size_t> index_;
  std::vector<PropertyTally> out_;
};

inline double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max({1.0, a.norm(), b.norm()});
}

struct Sampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> uniform{0.0, 1.0};

  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  Index dim(Index lo, Index hi) { return lo + static_cast<Index>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double u(double lo, double hi) { return lo + (hi - lo) * uniform(rng); }
  Eigen::MatrixXd gauss(Index r, Index c) {
    Eigen::MatrixXd M(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) M(i, j) = normal(rng);
    return M;
  }
  Eigen::MatrixXd symmetric(Index n) {
    const Eigen::MatrixXd G = gauss(n, n);
    return 0.5 * (G + G.transpose());
  }
  Eigen::MatrixXd spd(Index n) {
    const Eigen::MatrixXd G = gauss(n, n);
    return G * G.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  }
  /// Orthogonal times diagonal with singular values in [0.5, 2].
  Eigen::MatrixXd well_conditioned(Index n) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr1(gauss(n, n)), qr2(gauss(n, n));
    Eigen::VectorXd s(n);
    for (Index i = 0; i < n; ++i) s(i) = u(0.5, 2.0) * (uniform(rng) < 0.5 ? -1.0 : 1.0);
    return Eigen::MatrixXd(qr1.householderQ()) * s.asDiagonal() * Eigen::MatrixXd(qr2.householderQ());
  }
  Eigen::VectorXd values(Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = u(lo, hi);
    return v;
  }
};

inline ComplexVector real_spectrum(const Eigen::VectorXd& v) {
  ComplexVector out;
  for (Index i = 0; i < v.size(); ++i) out.emplace_back(v(i), 0.0);
  return out;
}

}  // namespace detail

/// The three fixed counterexamples plus the index-map examples, each to
/// `tol` (default 1e-12).
inline std::vector<PropertyTally> algebra_fixed_cases(double tol = 1e-12) {
  detail::Tallies t(1.0);
  const double e = std::exp(1.0);

  // index maps at n = 3
  const SymIndexScheme s3(3);
  t.expect("scheme n=3: s(1)=3, s(2)=5, s(3)=6", s3.offset(1) == 3 && s3.offset(2) == 5 && s3.offset(3) == 6);
  t.expect("scheme n=3: j=5 -> (r,c)=(2,3)", s3.row(4) == 1 && s3.col(4) == 2);

  const Eigen::MatrixXd A = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);

  const Eigen::MatrixXd AsI = skron(A, I);
  t.check("skron(diag(1,-1), I) = diag(1,0,-1)",
          (AsI - Eigen::Vector3d(1.0, 0.0, -1.0).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), tol);
  t.expect("skron(diag(1,-1), I) is singular although both factors are invertible",
           std::abs(AsI.determinant()) <= tol);

  Eigen::MatrixXd E21 = Eigen::MatrixXd::Zero(2, 2);
  E21(1, 0) = 1.0;
  t.check("skron(e2 e1^T, e1 e2^T) = diag(0,1/2,0)",
          (skron(E21, E21.transpose()) - Eigen::Vector3d(0.0, 0.5, 0.0).asDiagonal().toDenseMatrix())
              .cwiseAbs()
              .maxCoeff(),
          tol);

  const Eigen::MatrixXd lhs = expm(skron_sum(A, I));
  const Eigen::MatrixXd rhs = skron(expm(A), expm(I));
  t.check("exp(diag(1,-1) (+)s I) = diag(e^2, e, 1)",
          (lhs - Eigen::Vector3d(e * e, e, 1.0).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), tol);
  t.check("exp(diag(1,-1)) (x)s exp(I) = diag(e^2, (e^2+1)/2, 1)",
          (rhs - Eigen::Vector3d(e * e, (e * e + 1.0) / 2.0, 1.0).asDiagonal().toDenseMatrix())
              .cwiseAbs()
              .maxCoeff(),
          tol);
  t.expect("exp identity fails for A != B", (lhs - rhs).cwiseAbs().maxCoeff() > 0.1);
  return t.take();
}

/// Randomized property run. Each case draws fresh dimensions and matrices
/// and evaluates every property once.
inline AlgebraSuiteResult run_algebra_suite(const AlgebraSuiteOptions& opts = {}) {
  using detail::rel;
  detail::Tallies t(opts.tol_scale);
  detail::Sampler rnd(opts.seed);
  const Index N = std::max<Index>(2, opts.max_dim);

  for (int c = 0; c < opts.cases; ++c) {
    const Index n = rnd.dim(1, N), m = rnd.dim(1, N), p = rnd.dim(1, N);
    const SymIndexScheme sch(n);
    const SymBasis basis(n);
    const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);

    // index maps: s(0)=0, s(n)=nbar, strict increase, row-wise order, inversion
    {
      bool ok = sch.offset(0) == 0 && sch.offset(n) == tri(n);
      for (Index q = 0; q < n; ++q) ok = ok && sch.offset(q) < sch.offset(q + 1);
      Index j = 0;
      for (Index r = 0; r < n; ++r)
        for (Index col = r; col < n; ++col, ++j)
          ok = ok && sch.row(j) == r && sch.col(j) == col && sch.index(r, col) == j &&
               j == sch.offset(sch.row(j)) + (sch.col(j) - sch.row(j));
      t.expect("index maps enumerate the upper triangle row-wise", ok);
    }

    // orthonormal basis, W W^T = I, W^T W projects onto symmetric vectors
    {
      const Eigen::MatrixXd G = basis.W * basis.W.transpose();
      t.check("basis orthonormal (W W^T = I)", rel(G, Eigen::MatrixXd::Identity(tri(n), tri(n))), 1e-12);
      const Eigen::MatrixXd X = rnd.gauss(n, n);
      t.check("W^T W vec(X) = vec(pi(X))",
              rel(basis.W.transpose() * basis.W * oracle::vec(X), oracle::vec(sym_project(X).matrix())), 1e-12);
    }

    // isometry and round trip
    {
      const SymMatrix P(rnd.symmetric(n)), R(rnd.symmetric(n));
      const double ip = svec(P).values().dot(svec(R).values());
      const double fro = (P.matrix().cwiseProduct(R.matrix())).sum();
      t.check("svec isometry <svec A, svec B> = <A,B>_F",
              std::abs(ip - fro) / std::max({1.0, P.matrix().norm() * R.matrix().norm()}), 1e-12);
      t.check("smat(svec(P)) = P to one ulp", ulp_distance(smat(svec(P)).matrix(), P.matrix()), 1.0);
      t.check("svec(smat(v)) = v to one ulp", ulp_distance(svec(smat(svec(P))).values(), svec(P).values()), 1.0);
      t.check("svec = W vec", rel(svec(P).values(), basis.W * oracle::vec(P.matrix())), 1e-12);
      const Eigen::MatrixXd X = rnd.gauss(n, n);
      const SymMatrix pX = sym_project(X);
      t.check("pi idempotent and Frobenius-orthogonal residual",
              std::max(rel(sym_project(pX.matrix()).matrix(), pX.matrix()),
                       std::abs(pX.matrix().cwiseProduct(X - pX.matrix()).sum()) / std::max(1.0, X.squaredNorm())),
              1e-12);
    }

    // dense oracle agreement (rectangular), bilinearity, symmetry, transpose
    const Eigen::MatrixXd A = rnd.gauss(m, n), B = rnd.gauss(m, n), C = rnd.gauss(m, n);
    const Eigen::MatrixXd AB = skron(A, B);
    t.check("skron = W_m (A kron B) W_n^T", rel(AB, oracle::skron_dense(A, B)), 1e-12);
    {
      const double alpha = rnd.normal(rnd.rng);
      t.check("bilinear", rel(skron(alpha * A + C, B), alpha * skron(A, B) + skron(C, B)), 1e-10);
      t.check("symmetric A (x)s B = B (x)s A", rel(AB, skron(B, A)), 1e-14);
      t.check("transpose (A (x)s B)^T = A^T (x)s B^T", rel(AB.transpose(), skron(A.transpose(), B.transpose())), 1e-14);
    }

    // mixed vector product
    {
      const Eigen::MatrixXd X = rnd.gauss(n, n);
      const SymMatrix pX = sym_project(X);
      const Eigen::VectorXd lhs = AB * svec(pX).values();
      const Eigen::VectorXd rhs = svec(sym_project(B * pX.matrix() * A.transpose())).values();
      t.check("(A (x)s B) svec(pi(C)) = svec(pi(B pi(C) A^T))", rel(lhs, rhs), 1e-10);
    }

    // mixed products
    {
      const Eigen::MatrixXd Cp = rnd.gauss(n, p), Dp = rnd.gauss(n, p);
      t.check("(A(x)sB)(C(x)sD) = 1/2 (AC(x)sBD + AD(x)sBC)",
              rel(AB * skron(Cp, Dp), 0.5 * (skron(A * Cp, B * Dp) + skron(A * Dp, B * Cp))), 1e-10);
      t.check("(A(x)sB)(C(x)sC) = AC (x)s BC", rel(AB * skron(Cp, Cp), skron(A * Cp, B * Cp)), 1e-10);
      const Eigen::MatrixXd Cl = rnd.gauss(p, m);
      t.check("(C(x)sC)(A(x)sB) = CA (x)s CB", rel(skron(Cl, Cl) * AB, skron(Cl * A, Cl * B)), 1e-10);
    }

    // inverse of A (x)s A
    {
      const Eigen::MatrixXd S = rnd.well_conditioned(n);
      t.check("(A(x)sA)(A^-1(x)sA^-1) = I",
              rel(skron(S, S) * skron(S.inverse(), S.inverse()), Eigen::MatrixXd::Identity(tri(n), tri(n))), 1e-10);
    }

    // spectra
    const Eigen::MatrixXd Asq = rnd.gauss(n, n);
    t.check("sigma(A (x)s A) = {l_i l_j}", spectrum_check_skron(Asq, 1e-8).deviation, 1e-8);
    t.check("sigma(A (+)s A) = {l_i + l_j}", spectrum_check_skron_sum(Asq, 1e-8).deviation, 1e-8);
    {
      // simultaneously diagonalizable pair with real eigenvectors
      const Eigen::MatrixXd V = rnd.well_conditioned(n);
      const Eigen::MatrixXd Vi = V.inverse();
      const Eigen::VectorXd lam = rnd.values(n, -2.0, 2.0), mu = rnd.values(n, -2.0, 2.0);
      const Eigen::MatrixXd Ad = V * lam.asDiagonal() * Vi, Bd = V * mu.asDiagonal() * Vi;
      ComplexVector prod, sum;
      for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) {
          prod.emplace_back(0.5 * (lam(i) * mu(j) + lam(j) * mu(i)), 0.0);
          sum.emplace_back(0.5 * (lam(i) + mu(i) + lam(j) + mu(j)), 0.0);
        }
      t.check("sigma(A (x)s B), simultaneously diagonalizable",
              match_multisets(eigenvalues(skron(Ad, Bd)), prod, 1e-8).deviation, 1e-8);
      t.check("sigma(A (+)s B), simultaneously diagonalizable",
              match_multisets(eigenvalues(skron_sum(Ad, Bd)), sum, 1e-8).deviation, 1e-8);
      // shared eigenvectors x, y: x (x)s y is an eigenvector
      const Index i = rnd.dim(0, n - 1), j = rnd.dim(0, n - 1);
      const Eigen::VectorXd x = V.col(i), y = V.col(j);
      const Eigen::VectorXd xy = skron_rows(x, y).transpose();
      const double ev = 0.5 * (lam(i) * mu(j) + lam(j) * mu(i));
      t.check("shared eigenvectors: (A(x)sB)(x(x)sy) = 1/2(l1 m2 + l2 m1)(x(x)sy)",
              rel(skron(Ad, Bd) * xy, ev * xy), 1e-9);
      const double evs = 0.5 * (lam(i) + mu(i) + lam(j) + mu(j));
      t.check("shared eigenvectors: (A(+)sB)(x(x)sy) = 1/2(l1+m1+l2+m2)(x(x)sy)",
              rel(skron_sum(Ad, Bd) * xy, evs * xy), 1e-9);
    }

    // A (x)s I symmetric iff A symmetric
    {
      const Eigen::MatrixXd Ssym = rnd.symmetric(n);
      const Eigen::MatrixXd Msym = skron(Ssym, In);
      t.check("A symmetric => A (x)s I symmetric", asymmetry(Msym), 1e-14);
      if (n > 1) {
        const Eigen::MatrixXd Ns = Asq + 0.5 * (Eigen::MatrixXd::Ones(n, n).triangularView<Eigen::StrictlyUpper>().toDenseMatrix());
        const bool nonsym = asymmetry(Ns) > 1e-6;
        t.expect("A non-symmetric => A (x)s I non-symmetric", !nonsym || asymmetry(skron(Ns, In)) > 1e-8);
      }
    }

    // SPD transfer
    {
      const Eigen::MatrixXd P1 = rnd.spd(n), P2 = rnd.spd(n);
      const Eigen::MatrixXd M = skron(P1, P2);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
      t.expect("A, B SPD => A (x)s B SPD", asymmetry(M) <= 1e-12 && es.eigenvalues().minCoeff() > 0.0);
    }

    // zero law
    {
      t.expect("0 (x)s B = 0", skron(Eigen::MatrixXd::Zero(m, n), B).isZero(0.0));
      const Eigen::MatrixXd r1 = rnd.gauss(m, 1) * rnd.gauss(1, n);
      const Eigen::MatrixXd r2 = rnd.gauss(m, 1) * rnd.gauss(1, n);
      t.expect("A, B != 0 => A (x)s B != 0", skron(r1, r2).norm() > 0.0 && AB.norm() > 0.0);
    }

    // determinant
    {
      const double d = Asq.determinant();
      const double lhs = skron(Asq, Asq).determinant();
      const double rhs = std::pow(d, static_cast<double>(n + 1));
      t.check("det(A (x)s A) = det(A)^(n+1)", std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)), 1e-8);
    }

    // diagonality
    {
      const Eigen::MatrixXd D1 = rnd.values(n, -2.0, 2.0).asDiagonal(), D2 = rnd.values(n, -2.0, 2.0).asDiagonal();
      const Eigen::MatrixXd M = skron(D1, D2);
      t.expect("diagonal A, B => diagonal A (x)s B", (M - Eigen::MatrixXd(M.diagonal().asDiagonal())).isZero(0.0));
      if (n > 1) {
        Eigen::MatrixXd Dn = D1 + Eigen::MatrixXd(rnd.values(n, 1.0, 2.0).asDiagonal());  // nonzero diagonal
        Dn(0, 1) += 1.0;
        const Eigen::MatrixXd Dm = In;
        const Eigen::MatrixXd Mn = skron(Dn, Dm);
        t.expect("nonzero diagonals and A (x)s B diagonal => A, B diagonal (contrapositive)",
                 (Mn - Eigen::MatrixXd(Mn.diagonal().asDiagonal())).norm() > 0.0);
      }
    }

    // identity law
    {
      const double lam = rnd.u(0.5, 2.0) * (rnd.uniform(rnd.rng) < 0.5 ? -1.0 : 1.0);
      t.check("(l I) (x)s (I / l) = I", rel(skron(lam * In, In / lam), Eigen::MatrixXd::Identity(tri(n), tri(n))), 1e-14);
      const Eigen::MatrixXd Pert = lam * In + 1e-3 * rnd.gauss(n, n);
      t.expect("near-identity pair is not I",
               rel(skron(Pert, In / lam), Eigen::MatrixXd::Identity(tri(n), tri(n))) > 1e-8);
    }

    // kernel and homomorphism
    {
      t.check("(-A) (x)s (-A) = A (x)s A", rel(skron(-Asq, -Asq), skron(Asq, Asq)), 0.0);
      const Eigen::MatrixXd G = rnd.gauss(n, n);
      t.check("(AB) (x)s (AB) = (A (x)s A)(B (x)s B)", rel(skron(Asq * G, Asq * G), skron(Asq, Asq) * skron(G, G)), 1e-10);
    }

    // Kronecker oracle spot checks
    {
      const Eigen::MatrixXd X = rnd.gauss(n, n);
      t.check("kron: (A kron B) vec(X) = vec(B X A^T)", rel(oracle::kron(A, B) * oracle::vec(X), oracle::vec(B * X * A.transpose())), 1e-12);
      const Eigen::MatrixXd Cp = rnd.gauss(n, p), Dp = rnd.gauss(n, p);
      t.check("kron: (A kron B)(C kron D) = AC kron BD",
              rel(oracle::kron(A, B) * oracle::kron(Cp, Dp), oracle::kron(A * Cp, B * Dp)), 1e-12);
      t.check("kron: (A kron B)^T = A^T kron B^T", rel(oracle::kron(A, B).transpose(), oracle::kron(A.transpose(), B.transpose())), 0.0);
    }

    // Kronecker sum spectrum and exponential
    {
      const Index k = rnd.dim(1, 3), l = rnd.dim(1, 3);
      const Eigen::MatrixXd Ak = rnd.gauss(k, k), Bl = rnd.gauss(l, l);
      ComplexVector expect;
      for (const auto& a : eigenvalues(Ak))
        for (const auto& b : eigenvalues(Bl)) expect.push_back(a + b);
      t.check("sigma(A (+) B) = {l_i + m_j}", match_multisets(eigenvalues(oracle::kron_sum(Ak, Bl)), expect, 1e-8).deviation, 1e-8);
      t.check("exp(A (+) B) = exp(A) kron exp(B)", rel(expm(oracle::kron_sum(Ak, Bl)), oracle::kron(expm(Ak), expm(Bl))), 1e-9);
      const int q = static_cast<int>(rnd.dim(0, 4));
      Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(k * k, k * k), Apow = Eigen::MatrixXd::Identity(k, k);
      const Eigen::MatrixXd AkI = oracle::kron(Ak, Eigen::MatrixXd::Identity(k, k));
      for (int i = 0; i < q; ++i) {
        lhs = lhs * AkI;
        Apow = Apow * Ak;
      }
      t.check("(A kron I)^k = A^k kron I", rel(lhs, oracle::kron(Apow, Eigen::MatrixXd::Identity(k, k))), 1e-10);
    }

    // symmetric Kronecker sum, powers, exponential
    {
      const Eigen::MatrixXd Bsq = rnd.gauss(n, n);
      t.check("A (+)s B = A(x)sI + I(x)sB = (A+B)(x)sI",
              std::max(rel(skron_sum(Asq, Bsq), skron(Asq, In) + skron(In, Bsq)), rel(skron_sum(Asq, Bsq), skron(Asq + Bsq, In))),
              1e-12);
      const int q = static_cast<int>(rnd.dim(0, 5));
      t.check("(A (x)s I)^k binomial expansion", skron_pow_identity_check(Asq, q, 1e-10).deviation, 1e-10);
      t.check("(A (x)s I)^k = (I (x)s A)^k", rel(skron(Asq, In), skron(In, Asq)), 0.0);
      t.check("exp(A (+)s A) = exp(A) (x)s exp(A)", skron_exp_identity_check(Asq, 1e-9).deviation, 1e-9);
    }
  }

  AlgebraSuiteResult res;
  res.cases = opts.cases;
  res.properties = t.take();
  return res;
}

}  // namespace skron
