#pragma once

// Algebraic Lyapunov equations A^T P + P A + Q = 0 and the continuous-time
// algebraic Riccati equation.
//
// solve_ale_svec is the production solver: it reduces the ALE to the
// nbar x nbar system (A (+)s A)^T svec(P) = -svec(Q). solve_ale_integral and
// solve_care_reference are independent oracles (matrix-exponential quadrature
// and the Hamiltonian stable subspace) used to cross-check it and Kleinman's
// iteration.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <utility>

#include "skron/kron.hpp"
#include "skron/spectral.hpp"
#include "skron/sym.hpp"

namespace skron {

inline constexpr double kHurwitzMargin = 1e-10;

struct AleProblem {
  Eigen::MatrixXd A;
  SymMatrix Q;

  AleProblem(Eigen::MatrixXd a, SymMatrix q) : A(std::move(a)), Q(std::move(q)) {
    if (A.rows() != A.cols() || A.rows() != Q.dim())
      throw DimensionError("AleProblem: A must be square and match Q");
  }
};

/// LQR data (A, B, Q, R) with Q >= 0 and R > 0 checked at construction.
struct CareProblem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  SymMatrix Q;
  SymMatrix R;

  CareProblem(Eigen::MatrixXd a, Eigen::MatrixXd b, SymMatrix q, SymMatrix r)
      : A(std::move(a)), B(std::move(b)), Q(std::move(q)), R(std::move(r)) {
    const Index n = A.rows();
    if (A.cols() != n || B.rows() != n || Q.dim() != n || R.dim() != B.cols() || B.cols() < 1)
      throw DimensionError("CareProblem: inconsistent shapes");
    Eigen::LLT<Eigen::MatrixXd> llt(R.matrix());
    if (llt.info() != Eigen::Success)
      throw NumericalError("CareProblem: R is not positive definite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.matrix(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw NumericalError("CareProblem: Q is not positive semidefinite");
  }

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }

  /// K = R^-1 B^T P
  Eigen::MatrixXd gain(const SymMatrix& P) const {
    return R.matrix().llt().solve(B.transpose() * P.matrix());
  }
};

inline bool is_hurwitz(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  return spectral_abscissa(A) < -kHurwitzMargin;
}

inline double ale_residual(const Eigen::Ref<const Eigen::MatrixXd>& A, const SymMatrix& P,
                           const SymMatrix& Q) {
  return (A.transpose() * P.matrix() + P.matrix() * A + Q.matrix()).norm();
}

namespace detail {

/// First pair (i, j) with |l_i + l_j| <= tol, or (-1, -1).
inline std::pair<int, int> resonant_pair(const ComplexVector& l, double tol) {
  for (std::size_t i = 0; i < l.size(); ++i)
    for (std::size_t j = i; j < l.size(); ++j)
      if (std::abs(l[i] + l[j]) <= tol) return {static_cast<int>(i), static_cast<int>(j)};
  return {-1, -1};
}

}  // namespace detail

/// True iff l_i + l_j != 0 for every pair of eigenvalues of A.
inline bool ale_unique_solvable(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  return detail::resonant_pair(eigenvalues(A), 1e-10).first < 0;
}

inline SymMatrix solve_ale_svec(const AleProblem& p) {
  const ComplexVector l = eigenvalues(p.A);
  if (const auto [i, j] = detail::resonant_pair(l, 1e-10); i >= 0) {
    std::ostringstream os;
    os << "solve_ale_svec: singular operator, eigenvalues " << l[static_cast<std::size_t>(i)]
       << " and " << l[static_cast<std::size_t>(j)] << " sum to zero";
    throw NumericalError(os.str());
  }
  const Eigen::MatrixXd M = skron_sum(p.A, p.A).transpose();
  const Eigen::VectorXd rhs = -svec(p.Q).values();
  const Eigen::VectorXd x = M.partialPivLu().solve(rhs);
  SymMatrix P = smat(x);
  const double res = ale_residual(p.A, P, p.Q);
  if (!(res <= 1e-9 * std::max(1.0, p.Q.matrix().norm()) * std::max(1.0, P.matrix().norm()))) {
    std::ostringstream os;
    os << "solve_ale_svec: residual " << res << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  return P;
}

namespace detail {

// 15-point Gauss-Kronrod nodes on [-1, 1] (positive half) with the embedded
// 7-point Gauss weights.
inline constexpr std::array<double, 8> kGkNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelResult {
  Eigen::MatrixXd value;
  double error;
};

/// GK15 on [a, a + 2h] for F(t) = E(t)^T Q E(t), given E at the panel start
/// and exp(A s) at the 15 node offsets s (ordered left node, right node per
/// abscissa, then the centre).
inline PanelResult gk15_panel(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& E0,
                              const std::array<Eigen::MatrixXd, 15>& node_exp, double h) {
  const auto f = [&](std::size_t k) {
    const Eigen::MatrixXd E = E0 * node_exp[k];
    return Eigen::MatrixXd(E.transpose() * Q * E);
  };
  const Eigen::MatrixXd fc = f(14);
  Eigen::MatrixXd kron = kKronrodWeights[7] * fc;
  Eigen::MatrixXd gauss = kGaussWeights[3] * fc;
  for (std::size_t k = 0; k < 7; ++k) {
    const Eigen::MatrixXd s = f(2 * k) + f(2 * k + 1);
    kron += kKronrodWeights[k] * s;
    if (k % 2 == 1) gauss += kGaussWeights[k / 2] * s;
  }
  return {h * kron, h * (kron - gauss).norm()};
}

inline std::array<Eigen::MatrixXd, 15> node_exponentials(const Eigen::MatrixXd& A, double h) {
  std::array<Eigen::MatrixXd, 15> out;
  for (std::size_t k = 0; k < 7; ++k) {
    out[2 * k] = expm(A * (h - h * kGkNodes[k]));
    out[2 * k + 1] = expm(A * (h + h * kGkNodes[k]));
  }
  out[14] = expm(A * h);
  return out;
}

inline Eigen::MatrixXd adaptive_panel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q,
                                      const Eigen::MatrixXd& E0, double a, double b, double tol,
                                      int depth) {
  const double h = 0.5 * (b - a);
  const PanelResult r = gk15_panel(Q, E0, node_exponentials(A, h), h);
  if (r.error <= tol || depth >= 30) return r.value;
  const double m = a + h;
  return adaptive_panel(A, Q, E0, a, m, 0.5 * tol, depth + 1) +
         adaptive_panel(A, Q, E0 * expm(A * h), m, b, 0.5 * tol, depth + 1);
}

}  // namespace detail

/// P = int_0^inf exp(A^T t) Q exp(A t) dt by adaptive Gauss-Kronrod panels.
/// Integration proceeds panel by panel until the tail estimate
/// ||F(T)|| / (2 |alpha|) drops below `tol` (alpha is the spectral abscissa);
/// reaching `horizon` first is an error.
inline SymMatrix solve_ale_integral(const AleProblem& p, double horizon = 1e4,
                                    double tol = 1e-12) {
  const double alpha = spectral_abscissa(p.A);
  if (alpha >= -1e-8)
    throw NumericalError("solve_ale_integral: A is not Hurwitz (spectral abscissa " +
                         std::to_string(alpha) + ")");
  const Eigen::MatrixXd& Q = p.Q.matrix();
  const double qscale = std::max(1.0, Q.norm());
  const double panel = std::min(1.0 / std::max(p.A.norm(), 1e-12), 1.0 / -alpha);
  const double h = 0.5 * panel;
  const auto node_exp = detail::node_exponentials(p.A, h);
  const Eigen::MatrixXd step = expm(p.A * panel);
  const double local_tol = 1e-3 * tol * qscale;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.A.rows(), p.A.cols());
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(p.A.rows(), p.A.cols());
  double t = 0.0;
  while (true) {
    const detail::PanelResult r = detail::gk15_panel(Q, E, node_exp, h);
    acc += r.error <= local_tol ? r.value
                                : detail::adaptive_panel(p.A, Q, E, t, t + panel, local_tol, 1);
    t += panel;
    E = E * step;
    const double tail = (E.transpose() * Q * E).norm() / (-2.0 * alpha);
    if (tail < tol * qscale) break;
    if (t > horizon)
      throw NumericalError("solve_ale_integral: tail did not converge before horizon");
  }
  return SymMatrix(acc);
}

/// Rank of a complex matrix with singular-value threshold rel_tol * sigma_max.
inline Index numerical_rank(const Eigen::Ref<const Eigen::MatrixXcd>& M, double rel_tol = 1e-10) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double thr = rel_tol * s(0);
  return static_cast<Index>((s.array() > thr).count());
}

/// Symmetric PSD square root.
inline Eigen::MatrixXd psd_sqrt(const SymMatrix& Q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q.matrix());
  const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

struct StabilizabilityReport {
  bool stabilizable = false;
  bool detectable = false;
};

/// PBH tests at every eigenvalue with nonnegative real part:
/// rank [A - lI, B] = n and rank [A - lI; Q^1/2] = n.
inline StabilizabilityReport check_stabilizable_detectable(const CareProblem& c) {
  const Index n = c.n();
  const Eigen::MatrixXd Qh = psd_sqrt(c.Q);
  StabilizabilityReport out{true, true};
  for (const auto& l : eigenvalues(c.A)) {
    if (l.real() < -kHurwitzMargin) continue;
    Eigen::MatrixXcd shifted = c.A.cast<std::complex<double>>();
    shifted.diagonal().array() -= l;
    Eigen::MatrixXcd ctrb(n, n + c.m());
    ctrb << shifted, c.B.cast<std::complex<double>>();
    Eigen::MatrixXcd obsv(2 * n, n);
    obsv << shifted, Qh.cast<std::complex<double>>();
    if (numerical_rank(ctrb) < n) out.stabilizable = false;
    if (numerical_rank(obsv) < n) out.detectable = false;
  }
  return out;
}

struct CareSolution {
  SymMatrix P;
  Eigen::MatrixXd K;
};

/// Stabilizing CARE solution from the stable invariant subspace of
/// H = [A, -B R^-1 B^T; -Q, -A^T], extracted with the matrix sign function:
/// with W = sign(H), the subspace span[I; P] is ker(W + I), so
/// [W12; W22 + I] P = -[W11 + I; W21].
inline CareSolution solve_care_reference(const CareProblem& c) {
  const Index n = c.n();
  const Eigen::MatrixXd G = c.B * c.R.matrix().llt().solve(c.B.transpose());
  Eigen::MatrixXd Z(2 * n, 2 * n);
  Z << c.A, -G, -c.Q.matrix(), -c.A.transpose();

  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Z);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14))
      throw NumericalError(
          "solve_care_reference: Hamiltonian has eigenvalues on or near the imaginary axis "
          "((A, B) not stabilizable or (Q^1/2, A) not detectable)");
    double logdet = 0.0;
    const Eigen::MatrixXd& LU = lu.matrixLU();
    for (Index i = 0; i < 2 * n; ++i) logdet += std::log(std::abs(LU(i, i)));
    const double scale = std::exp(-logdet / static_cast<double>(2 * n));
    const Eigen::MatrixXd next = 0.5 * (scale * Z + lu.inverse() / scale);
    const double change = (next - Z).norm();
    Z = next;
    if (change <= 1e-13 * Z.norm()) break;
  }

  Eigen::MatrixXd lhs(2 * n, n);
  Eigen::MatrixXd rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + Eigen::MatrixXd::Identity(n, n);
  rhs << Z.topLeftCorner(n, n) + Eigen::MatrixXd::Identity(n, n), Z.bottomLeftCorner(n, n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  qr.setThreshold(1e-12);
  if (qr.rank() < n)
    throw NumericalError("solve_care_reference: stable invariant subspace is ill-conditioned");
  const Eigen::MatrixXd X = qr.solve(Eigen::MatrixXd(-rhs));
  SymMatrix P = sym_project(X);
  Eigen::MatrixXd K = c.gain(P);

  const Eigen::MatrixXd& Pm = P.matrix();
  const double res = (c.A.transpose() * Pm + Pm * c.A - Pm * G * Pm + c.Q.matrix()).norm();
  const double scale = std::max({1.0, c.Q.matrix().norm(), Pm.norm() * c.A.norm()});
  if (!(res <= 1e-8 * scale)) {
    std::ostringstream os;
    os << "solve_care_reference: CARE residual " << res << " too large";
    throw NumericalError(os.str());
  }
  if (!is_hurwitz(c.A - c.B * K))
    throw NumericalError("solve_care_reference: closed loop A - B K* is not Hurwitz");
  return {std::move(P), std::move(K)};
}

}  // namespace skron
