#pragma once

// Closed-loop data collection and the data operators of the learning
// regression.
//
// Integrals of x_j (x)s y over each sample interval are produced by
// appending running accumulators to the ODE state, so they carry the
// integrator's accuracy; the dataset stores accumulator values at the
// sample instants and interval integrals are their differences.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "skron/kron.hpp"
#include "skron/ode.hpp"
#include "skron/plant.hpp"

namespace skron {

struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad

  friend bool operator==(const Sinusoid&, const Sinusoid&) = default;
};

/// Additive probing input d(t): one sum of cosines per input channel,
/// d_c(t) = sum_k a_k cos(w_k t + phi_k).
struct ProbingSignal {
  std::vector<std::vector<Sinusoid>> channels;

  static ProbingSignal zero(Index m) {
    return ProbingSignal{std::vector<std::vector<Sinusoid>>(static_cast<std::size_t>(m))};
  }

  Index size() const { return static_cast<Index>(channels.size()); }

  Eigen::VectorXd operator()(double t) const {
    Eigen::VectorXd d(size());
    for (std::size_t c = 0; c < channels.size(); ++c) {
      double v = 0.0;
      for (const auto& s : channels[c]) v += s.amplitude * std::cos(s.frequency * t + s.phase);
      d(static_cast<Index>(c)) = v;
    }
    return d;
  }

  /// Sum of |amplitudes| on channel c; |d_c(t)| never exceeds it.
  double bound(std::size_t c) const {
    double b = 0.0;
    for (const auto& s : channels.at(c)) b += std::abs(s.amplitude);
    return b;
  }

  friend bool operator==(const ProbingSignal&, const ProbingSignal&) = default;
};

/// Integrand families accumulated per loop.
enum class Integrand { XX, XGU, XW };

inline const char* to_string(Integrand k) {
  switch (k) {
    case Integrand::XX: return "x_x";
    case Integrand::XGU: return "x_gu";
    case Integrand::XW: return "x_w";
  }
  return "?";
}

/// Samples for one loop: times t_0 < ... < t_l, loop states, and the three
/// accumulator trajectories (row k = integral from 0 to t_k).
struct LoopData {
  std::vector<double> times;
  Eigen::MatrixXd states;  // (l+1) x n_j
  Eigen::MatrixXd acc_xx;  // (l+1) x nbar_j
  Eigen::MatrixXd acc_xgu;
  Eigen::MatrixXd acc_xw;

  Index samples() const { return static_cast<Index>(times.size()); }
  Index intervals() const { return samples() - 1; }

  const Eigen::MatrixXd& accumulator(Integrand k) const {
    switch (k) {
      case Integrand::XX: return acc_xx;
      case Integrand::XGU: return acc_xgu;
      case Integrand::XW: return acc_xw;
    }
    throw DimensionError("LoopData: unknown integrand");
  }
};

struct TrajectoryDataset {
  LoopPartition partition;
  Eigen::MatrixXd K0;
  ProbingSignal probing;
  Eigen::VectorXd x0;
  std::vector<LoopData> loops;

  const LoopData& loop(std::size_t j) const {
    if (j >= loops.size())
      throw DimensionError("TrajectoryDataset: loop " + std::to_string(j) + " not present");
    return loops[j];
  }
};

/// Sample schedule. Either uniform (t_k = k Ts, k = 0..l for every loop) or
/// explicit per-loop instants.
struct SampleSpec {
  double Ts = 0.1;
  Index l = 5;
  std::vector<std::vector<double>> per_loop;  // overrides uniform when non-empty

  std::vector<double> times_for(std::size_t j) const {
    if (!per_loop.empty()) return per_loop.at(j);
    std::vector<double> t(static_cast<std::size_t>(l) + 1);
    for (Index k = 0; k <= l; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) * Ts;
    return t;
  }
};

struct SimulationOptions {
  OdeOptions ode;
};

/// Simulate x' = f(x) + g(x) u, u = -K0 x + d(t), from x(0) = x0 and sample
/// the loop data at the requested instants.
inline TrajectoryDataset simulate_closed_loop(const DecentralizedPlant& plant,
                                              const Eigen::MatrixXd& K0, const ProbingSignal& d,
                                              const Eigen::VectorXd& x0, const SampleSpec& spec,
                                              const SimulationOptions& opts = {}) {
  const Index n = plant.n(), m = plant.m();
  const LoopPartition& part = plant.partition;
  detail::require_dims(K0.rows() == m && K0.cols() == n, "simulate_closed_loop: K0 must be m x n");
  detail::require_dims(x0.size() == n, "simulate_closed_loop: x0 has the wrong length");
  detail::require_dims(d.size() == m, "simulate_closed_loop: probing signal needs m channels");
  if (!is_hurwitz(plant.A - plant.B * K0))
    throw NumericalError("simulate_closed_loop: A - B K0 is not Hurwitz");
  if (!spec.per_loop.empty() && spec.per_loop.size() != part.loops())
    throw DimensionError("simulate_closed_loop: need one sample schedule per loop");

  std::vector<std::vector<double>> loop_times;
  std::vector<double> all_times;
  for (std::size_t j = 0; j < part.loops(); ++j) {
    auto t = spec.times_for(j);
    if (t.size() < 2) throw DimensionError("simulate_closed_loop: need at least two sample instants");
    if (t.front() < 0.0) throw DimensionError("simulate_closed_loop: sample instants must be >= 0");
    for (std::size_t k = 1; k < t.size(); ++k)
      if (!(t[k] > t[k - 1]))
        throw DimensionError("simulate_closed_loop: sample instants must be strictly increasing");
    all_times.insert(all_times.end(), t.begin(), t.end());
    loop_times.push_back(std::move(t));
  }
  std::sort(all_times.begin(), all_times.end());
  all_times.erase(std::unique(all_times.begin(), all_times.end()), all_times.end());
  if (!(all_times.back() > 0.0)) throw DimensionError("simulate_closed_loop: horizon must be > 0");

  // Augmented state layout: x, then per loop [acc_xx | acc_xgu | acc_xw].
  std::vector<Index> acc_offset(part.loops());
  Index width = n;
  for (std::size_t j = 0; j < part.loops(); ++j) {
    acc_offset[j] = width;
    width += 3 * tri(part.n(j));
  }

  const auto rhs = [&](double t, const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd u = -K0 * x + d(t);
    const Eigen::VectorXd fx = plant.f(x);
    const Eigen::MatrixXd gx = plant.g(x);
    const Eigen::VectorXd gu = gx * u;
    Eigen::VectorXd dz(width);
    dz.head(n) = fx + gu;
    for (std::size_t j = 0; j < part.loops(); ++j) {
      const Index o = part.state_offset(j), nj = part.n(j), nb = tri(nj);
      const Eigen::VectorXd xj = x.segment(o, nj);
      const Eigen::VectorXd wj = fx.segment(o, nj) - plant.A.block(o, o, nj, nj) * xj;
      dz.segment(acc_offset[j], nb) = skron_rows(xj, xj).transpose();
      dz.segment(acc_offset[j] + nb, nb) = skron_rows(xj, gu.segment(o, nj)).transpose();
      dz.segment(acc_offset[j] + 2 * nb, nb) = skron_rows(xj, wj).transpose();
    }
    return dz;
  };

  OdeOptions ode = opts.ode;
  ode.guard_size = n;
  DormandPrince solver(rhs, ode);

  Eigen::VectorXd z = Eigen::VectorXd::Zero(width);
  z.head(n) = x0;
  std::map<double, Eigen::VectorXd> snapshots;
  double t = 0.0;
  for (double tk : all_times) {
    z = solver.integrate(t, std::move(z), tk);
    t = tk;
    snapshots.emplace(tk, z);
  }

  TrajectoryDataset out;
  out.partition = part;
  out.K0 = K0;
  out.probing = d;
  out.x0 = x0;
  for (std::size_t j = 0; j < part.loops(); ++j) {
    const Index o = part.state_offset(j), nj = part.n(j), nb = tri(nj);
    const auto& tj = loop_times[j];
    const Index rows = static_cast<Index>(tj.size());
    LoopData ld;
    ld.times = tj;
    ld.states.resize(rows, nj);
    ld.acc_xx.resize(rows, nb);
    ld.acc_xgu.resize(rows, nb);
    ld.acc_xw.resize(rows, nb);
    for (Index k = 0; k < rows; ++k) {
      const Eigen::VectorXd& zk = snapshots.at(tj[static_cast<std::size_t>(k)]);
      ld.states.row(k) = zk.segment(o, nj).transpose();
      ld.acc_xx.row(k) = zk.segment(acc_offset[j], nb).transpose();
      ld.acc_xgu.row(k) = zk.segment(acc_offset[j] + nb, nb).transpose();
      ld.acc_xw.row(k) = zk.segment(acc_offset[j] + 2 * nb, nb).transpose();
    }
    out.loops.push_back(std::move(ld));
  }
  return out;
}

/// delta_{x,x}: row k = (x_k + x_{k-1})^T (x)s (x_k - x_{k-1})^T, k = 1..l.
inline Eigen::MatrixXd delta_matrix(const Eigen::Ref<const Eigen::MatrixXd>& states) {
  detail::require_dims(states.rows() >= 2, "delta_matrix: need at least two samples");
  const Index l = states.rows() - 1;
  Eigen::MatrixXd D(l, tri(states.cols()));
  for (Index k = 1; k <= l; ++k) {
    const Eigen::VectorXd a = states.row(k).transpose();
    const Eigen::VectorXd b = states.row(k - 1).transpose();
    D.row(k - 1) = skron_rows(a + b, a - b);
  }
  return D;
}

inline Eigen::MatrixXd delta_matrix(const TrajectoryDataset& ds, std::size_t j) {
  return delta_matrix(ds.loop(j).states);
}

/// Row k = accumulator(t_k) - accumulator(t_{k-1}).
inline Eigen::MatrixXd integral_matrix(const Eigen::Ref<const Eigen::MatrixXd>& accumulator) {
  detail::require_dims(accumulator.rows() >= 2, "integral_matrix: need at least two samples");
  const Index l = accumulator.rows() - 1;
  return accumulator.bottomRows(l) - accumulator.topRows(l);
}

inline Eigen::MatrixXd integral_matrix(const TrajectoryDataset& ds, std::size_t j, Integrand k) {
  const LoopData& ld = ds.loop(j);
  const Eigen::MatrixXd& acc = ld.accumulator(k);
  if (acc.rows() != ld.samples())
    throw DimensionError(std::string("integral_matrix: integrand ") + to_string(k) +
                         " was not accumulated");
  return integral_matrix(acc);
}

/// Right action of a state map on data operators:
/// delta_{Sx,Sy} = delta_{x,y} skron(S,S)^T and I_{Sx,Sy} = I_{x,y} skron(S,S)^T.
inline Eigen::MatrixXd modulate_rows(const Eigen::Ref<const Eigen::MatrixXd>& M,
                                     const Eigen::Ref<const Eigen::MatrixXd>& S) {
  detail::require_dims(S.cols() >= 1 && M.cols() == tri(S.cols()),
                       "modulate_rows: operator width does not match S");
  return M * skron(S, S).transpose();
}

/// I_{Ax,Bx} = I_{x,x} skron(A,B)^T.
inline Eigen::MatrixXd mixed_integral(const Eigen::Ref<const Eigen::MatrixXd>& Ixx,
                                      const Eigen::Ref<const Eigen::MatrixXd>& A,
                                      const Eigen::Ref<const Eigen::MatrixXd>& B) {
  detail::require_dims(A.rows() == B.rows() && A.cols() == B.cols() && Ixx.cols() == tri(A.cols()),
                       "mixed_integral: shape mismatch");
  return Ixx * skron(A, B).transpose();
}

/// Infinite-horizon LQR cost of u = -K x from x0, integrated in chunks of
/// length `chunk` until a chunk adds less than `tol`.
inline double evaluate_lqr_cost(const DecentralizedPlant& plant, const Eigen::MatrixXd& K,
                                const Eigen::VectorXd& x0, double chunk = 10.0, double tol = 1e-12,
                                double horizon = 1e5) {
  const Index n = plant.n();
  detail::require_dims(K.rows() == plant.m() && K.cols() == n && x0.size() == n,
                       "evaluate_lqr_cost: shape mismatch");
  const Eigen::MatrixXd Qm = plant.Q.matrix();
  const Eigen::MatrixXd Rm = plant.R.matrix();
  const auto rhs = [&](double, const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd u = -K * x;
    Eigen::VectorXd dz(n + 1);
    dz.head(n) = plant.f(x) + plant.g(x) * u;
    dz(n) = x.dot(Qm * x) + u.dot(Rm * u);
    return dz;
  };
  OdeOptions o;
  o.guard_size = n;
  DormandPrince solver(rhs, o);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n + 1);
  z.head(n) = x0;
  if (x0.norm() == 0.0) return 0.0;
  double t = 0.0;
  while (true) {
    const double before = z(n);
    z = solver.integrate(t, std::move(z), t + chunk);
    t += chunk;
    if (z(n) - before < tol * std::max(1.0, z(n))) break;
    if (t > horizon) throw NumericalError("evaluate_lqr_cost: cost did not settle before horizon");
  }
  return z(n);
}

}  // namespace skron
