#pragma once

// Control-affine plants x' = f(x) + g(x) u with an N-loop decentralized
// partition of states and inputs, their linearization (A, B) and the
// block-diagonal LQR cost (Q, R).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "skron/error.hpp"
#include "skron/lyapunov.hpp"
#include "skron/sym.hpp"

namespace skron {

using DriftFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using InputMapFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// State and input dimensions of each decentralized loop.
class LoopPartition {
 public:
  LoopPartition() = default;
  LoopPartition(std::vector<Index> state_dims, std::vector<Index> input_dims)
      : n_(std::move(state_dims)), m_(std::move(input_dims)) {
    if (n_.empty() || n_.size() != m_.size())
      throw DimensionError("LoopPartition: need one (n_j, m_j) pair per loop");
    for (std::size_t j = 0; j < n_.size(); ++j)
      if (n_[j] < 1 || m_[j] < 1) throw DimensionError("LoopPartition: loop dimensions must be >= 1");
  }

  /// Single loop covering the whole plant (the centralized EIRL case).
  static LoopPartition single(Index n, Index m) { return LoopPartition({n}, {m}); }

  std::size_t loops() const { return n_.size(); }
  Index n(std::size_t j) const { return n_.at(j); }
  Index m(std::size_t j) const { return m_.at(j); }
  Index n_total() const { return std::accumulate(n_.begin(), n_.end(), Index{0}); }
  Index m_total() const { return std::accumulate(m_.begin(), m_.end(), Index{0}); }
  Index state_offset(std::size_t j) const {
    return std::accumulate(n_.begin(), n_.begin() + static_cast<std::ptrdiff_t>(j), Index{0});
  }
  Index input_offset(std::size_t j) const {
    return std::accumulate(m_.begin(), m_.begin() + static_cast<std::ptrdiff_t>(j), Index{0});
  }
  const std::vector<Index>& state_dims() const { return n_; }
  const std::vector<Index>& input_dims() const { return m_; }

  friend bool operator==(const LoopPartition&, const LoopPartition&) = default;

 private:
  std::vector<Index> n_;
  std::vector<Index> m_;
};

/// Zero out everything outside the diagonal blocks of `M`.
inline Eigen::MatrixXd block_diagonal_part(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                           const std::vector<Index>& row_dims,
                                           const std::vector<Index>& col_dims) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(M.rows(), M.cols());
  Index r = 0, c = 0;
  for (std::size_t j = 0; j < row_dims.size(); ++j) {
    out.block(r, c, row_dims[j], col_dims[j]) = M.block(r, c, row_dims[j], col_dims[j]);
    r += row_dims[j];
    c += col_dims[j];
  }
  return out;
}

struct DecentralizedPlant {
  std::string name;
  LoopPartition partition;
  DriftFn f;
  InputMapFn g;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  SymMatrix Q;
  SymMatrix R;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  std::size_t loops() const { return partition.loops(); }

  Eigen::MatrixXd A_block(std::size_t j) const {
    const Index o = partition.state_offset(j), nj = partition.n(j);
    return A.block(o, o, nj, nj);
  }
  Eigen::MatrixXd B_block(std::size_t j) const {
    return B.block(partition.state_offset(j), partition.input_offset(j), partition.n(j),
                   partition.m(j));
  }
  SymMatrix Q_block(std::size_t j) const {
    const Index o = partition.state_offset(j), nj = partition.n(j);
    return SymMatrix(Q.matrix().block(o, o, nj, nj));
  }
  SymMatrix R_block(std::size_t j) const {
    const Index o = partition.input_offset(j), mj = partition.m(j);
    return SymMatrix(R.matrix().block(o, o, mj, mj));
  }

  /// Loop-j LQR data (A_jj, B_jj, Q_j, R_j).
  CareProblem care_loop(std::size_t j) const {
    return CareProblem(A_block(j), B_block(j), Q_block(j), R_block(j));
  }
  CareProblem care() const { return CareProblem(A, B, Q, R); }

  /// Same plant viewed through a different loop partition.
  DecentralizedPlant with_partition(LoopPartition p) const {
    DecentralizedPlant out = *this;
    out.partition = std::move(p);
    out.validate_structure();
    return out;
  }

  /// Shape checks and the block-diagonal cost structure.
  void validate_structure() const {
    const Index n = A.rows(), m = B.cols();
    detail::require_dims(A.cols() == n && B.rows() == n && Q.dim() == n && R.dim() == m,
                         "DecentralizedPlant '" + name + "': inconsistent A, B, Q, R shapes");
    detail::require_dims(partition.n_total() == n && partition.m_total() == m,
                         "DecentralizedPlant '" + name + "': partition does not tile the plant");
    const auto& nd = partition.state_dims();
    const auto& md = partition.input_dims();
    if ((Q.matrix() - block_diagonal_part(Q.matrix(), nd, nd)).cwiseAbs().maxCoeff() > 0.0 ||
        (R.matrix() - block_diagonal_part(R.matrix(), md, md)).cwiseAbs().maxCoeff() > 0.0)
      throw DimensionError("DecentralizedPlant '" + name +
                           "': Q and R must be block diagonal in the loop partition");
    for (std::size_t j = 0; j < partition.loops(); ++j) (void)care_loop(j);  // Q_j >= 0, R_j > 0
  }

  /// Structure plus f(0) = 0, g(0) = B and central-difference agreement of
  /// df/dx(0) with A.
  void validate() const {
    validate_structure();
    const Index n = A.rows();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd f0 = f(zero);
    if (f0.size() != n || f0.norm() > 1e-12)
      throw NumericalError("DecentralizedPlant '" + name + "': f(0) != 0");
    const Eigen::MatrixXd g0 = g(zero);
    if (g0.rows() != n || g0.cols() != B.cols() || (g0 - B).cwiseAbs().maxCoeff() > 1e-12)
      throw NumericalError("DecentralizedPlant '" + name + "': g(0) != B");
    if ((linearize_drift(f, n) - A).cwiseAbs().maxCoeff() > 1e-6)
      throw NumericalError("DecentralizedPlant '" + name +
                           "': finite-difference Jacobian of f at 0 disagrees with A");
  }

  Eigen::VectorXd f_loop(std::size_t j, const Eigen::VectorXd& x) const {
    return f(x).segment(partition.state_offset(j), partition.n(j));
  }
  /// Rows of g(x) belonging to loop j (n_j x m).
  Eigen::MatrixXd g_loop(std::size_t j, const Eigen::VectorXd& x) const {
    return g(x).middleRows(partition.state_offset(j), partition.n(j));
  }
  /// w_j = f_j(x) - A_jj x_j
  Eigen::VectorXd w_loop(std::size_t j, const Eigen::VectorXd& x) const {
    const Index o = partition.state_offset(j), nj = partition.n(j);
    return f(x).segment(o, nj) - A.block(o, o, nj, nj) * x.segment(o, nj);
  }

  /// Central-difference Jacobian of f at 0.
  static Eigen::MatrixXd linearize_drift(const DriftFn& f, Index n, double step = 1e-5) {
    Eigen::MatrixXd J(n, n);
    for (Index k = 0; k < n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e(k) = step;
      J.col(k) = (f(e) - f(-e)) / (2 * step);
    }
    return J;
  }
};

/// x' = A x + B u.
inline DecentralizedPlant linear_plant(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd B,
                                       SymMatrix Q, SymMatrix R, LoopPartition partition) {
  DecentralizedPlant p;
  p.name = std::move(name);
  p.partition = std::move(partition);
  p.f = [A](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x); };
  p.g = [B](const Eigen::VectorXd&) { return B; };
  p.A = std::move(A);
  p.B = std::move(B);
  p.Q = std::move(Q);
  p.R = std::move(R);
  p.validate();
  return p;
}

/// Two decoupled first-order loops: A = diag(-1, -0.1), B = I, Q = I,
/// R = diag(1, 10). A fast loop and a slow loop a decade apart.
inline DecentralizedPlant lin2d_plant(bool decentralized = false) {
  Eigen::MatrixXd A = Eigen::Vector2d(-1.0, -0.1).asDiagonal();
  Eigen::MatrixXd B = Eigen::MatrixXd::Identity(2, 2);
  const SymMatrix Q = SymMatrix::identity(2);
  const SymMatrix R(Eigen::Vector2d(1.0, 10.0).asDiagonal().toDenseMatrix());
  return linear_plant("lin2d", std::move(A), std::move(B), Q, R,
                      decentralized ? LoopPartition({1, 1}, {1, 1}) : LoopPartition::single(2, 2));
}

/// Parameters of the synthetic two-loop nonlinear plant.
///
/// Loop 1 (n1 = 1): x1' = -x1 - cubic x1^3 + coupling x2 + u1
/// Loop 2 (n2 = 2): a damped oscillator with position x2 and rate v
///   x2' = v
///   v'  = -omega^2 x2 - 2 zeta omega v - cubic x2^3 + coupling x1
///         + bilinear x1 v + u2
/// The rate is stored in units rate_scale times too coarse, x3 = v / rate_scale,
/// and the cost is set on the physical rate (Q = diag(1, 1, rate_scale^2)).
/// The diagonal modulation diag(1, 1, rate_scale) restores physical units.
struct SyntheticTwoLoopParams {
  double omega = 0.3;
  double zeta = 0.5;
  double cubic = 0.5;
  double coupling = 0.05;
  double bilinear = 0.1;
  double rate_scale = 10.0;
};

inline DecentralizedPlant synthetic_two_loop_plant(const SyntheticTwoLoopParams& prm = {}) {
  if (!(prm.rate_scale > 0.0)) throw DimensionError("synthetic_two_loop_plant: rate_scale must be > 0");
  const double rs = prm.rate_scale;
  const double w2 = prm.omega * prm.omega;
  const double damp = 2.0 * prm.zeta * prm.omega;
  Eigen::MatrixXd A(3, 3);
  A << -1.0, prm.coupling, 0.0,  //
      0.0, 0.0, rs,              //
      prm.coupling / rs, -w2 / rs, -damp;
  Eigen::MatrixXd B(3, 2);
  B << 1.0, 0.0,  //
      0.0, 0.0,   //
      0.0, 1.0 / rs;

  DecentralizedPlant p;
  p.name = "synthetic2loop";
  p.partition = LoopPartition({1, 2}, {1, 1});
  p.f = [A, prm](const Eigen::VectorXd& x) {
    Eigen::VectorXd out = A * x;
    out(0) -= prm.cubic * x(0) * x(0) * x(0);
    out(2) += (-prm.cubic * x(1) * x(1) * x(1)) / prm.rate_scale + prm.bilinear * x(0) * x(2);
    return out;
  };
  p.g = [B](const Eigen::VectorXd&) { return B; };
  p.A = A;
  p.B = B;
  p.Q = SymMatrix(Eigen::Vector3d(1.0, 1.0, rs * rs).asDiagonal().toDenseMatrix());
  p.R = SymMatrix::identity(2);
  p.validate();
  return p;
}

}  // namespace skron
