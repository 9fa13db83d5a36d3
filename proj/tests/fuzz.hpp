#pragma once

// Random instance generators shared by the unit tests and the acceptance run.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "skron/skron.hpp"

namespace skron::fuzz {

using Rng = std::mt19937_64;

inline double uniform(Rng& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Index pick(Rng& g, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(g);
}

inline Eigen::MatrixXd gaussian(Rng& g, Index r, Index c) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXd M(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) M(i, j) = nd(g);
  return M;
}

/// Hurwitz with spectral abscissa <= -margin: -(M M^T/n + margin I) + skew.
inline Eigen::MatrixXd hurwitz(Rng& g, Index n, double margin = 0.2) {
  const Eigen::MatrixXd M = gaussian(g, n, n);
  const Eigen::MatrixXd K = gaussian(g, n, n);
  return -(M * M.transpose() / static_cast<double>(n) +
           margin * Eigen::MatrixXd::Identity(n, n)) +
         0.5 * (K - K.transpose());
}

inline SymMatrix spd(Rng& g, Index n, double floor = 0.1) {
  const Eigen::MatrixXd M = gaussian(g, n, n);
  return SymMatrix(M * M.transpose() / static_cast<double>(n) +
                   floor * Eigen::MatrixXd::Identity(n, n));
}

inline Eigen::MatrixXd orthogonal(Rng& g, Index n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(g, n, n));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// U diag(s) V^T with singular values in [lo, hi].
inline Eigen::MatrixXd conditioned(Rng& g, Index n, double lo, double hi) {
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) s(i) = std::exp(uniform(g, std::log(lo), std::log(hi)));
  return orthogonal(g, n) * s.asDiagonal() * orthogonal(g, n).transpose();
}

/// (A, B, Q, R) with Q and R scaled jointly so that ||P*||_F <= 1. K* is
/// unchanged; iterate comparisons then sit well above rounding.
inline CareProblem normalized_care(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const SymMatrix& Q, const SymMatrix& R) {
  const CareProblem raw(A, B, Q, R);
  const double s = std::max(1.0, solve_care_reference(raw).P.matrix().norm());
  return CareProblem(A, B, (1.0 / s) * Q, (1.0 / s) * R);
}

/// Multi-loop linear plant with Hurwitz diagonal blocks and weak coupling, so
/// K0 = 0 stabilizes both the whole plant and every loop.
struct LinearInstance {
  DecentralizedPlant plant;
  Eigen::MatrixXd K0;
  Eigen::VectorXd x0;
  ProbingSignal probing;
  SampleSpec samples;
  ModulationSpec modulation;
};

inline LinearInstance linear_instance(Rng& g, Index max_loop_dim = 3) {
  const Index loops = pick(g, 1, 2);
  std::vector<Index> nd, md;
  for (Index j = 0; j < loops; ++j) {
    nd.push_back(pick(g, 1, max_loop_dim));
    md.push_back(pick(g, 1, std::min<Index>(2, nd.back())));
  }
  const LoopPartition part(nd, md);
  const Index n = part.n_total(), m = part.m_total();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), B = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n), R = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t j = 0; j < part.loops(); ++j) {
    const Index so = part.state_offset(j), io = part.input_offset(j);
    A.block(so, so, part.n(j), part.n(j)) = hurwitz(g, part.n(j), 0.3);
    B.block(so, io, part.n(j), part.m(j)) = gaussian(g, part.n(j), part.m(j));
    Q.block(so, so, part.n(j), part.n(j)) = spd(g, part.n(j)).matrix();
    R.block(io, io, part.m(j), part.m(j)) = spd(g, part.m(j), 0.5).matrix();
  }
  const Eigen::MatrixXd coupling = 0.05 * gaussian(g, n, n);
  A += coupling - block_diagonal_part(coupling, part.state_dims(), part.state_dims());
  while (!is_hurwitz(A)) A -= 0.1 * Eigen::MatrixXd::Identity(n, n);

  LinearInstance inst;
  inst.plant = linear_plant("fuzz", A, B, SymMatrix(Q), SymMatrix(R), part);
  inst.K0 = Eigen::MatrixXd::Zero(m, n);
  inst.x0 = gaussian(g, n, 1);
  inst.probing = ProbingSignal::zero(m);
  for (auto& ch : inst.probing.channels)
    for (int k = 0; k < 3; ++k)
      ch.push_back({uniform(g, 0.3, 1.0), uniform(g, 0.2, 3.0), uniform(g, 0.0, 6.2)});
  Index nb = 0;
  for (std::size_t j = 0; j < part.loops(); ++j) nb = std::max(nb, tri(part.n(j)));
  inst.samples.Ts = 0.25;
  inst.samples.l = std::max<Index>(2 * tri(n), nb + 4);
  for (std::size_t j = 0; j < part.loops(); ++j)
    inst.modulation.blocks.push_back(conditioned(g, part.n(j), 0.2, 5.0));
  return inst;
}

}  // namespace skron::fuzz
