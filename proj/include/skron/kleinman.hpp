#pragma once

// Model-based Kleinman policy iteration and its monotonicity diagnostics.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "skron/lyapunov.hpp"

namespace skron {

struct KleinmanIterate {
  SymMatrix P;         // solves the ALE for K (the gain it was computed from)
  Eigen::MatrixXd K;   // gain used at this iterate
  double ale_residual = 0.0;
  double hurwitz_margin = 0.0;  // spectral abscissa of A - B K (< 0)
};

struct KleinmanRun {
  std::size_t loop = 0;
  std::vector<KleinmanIterate> iterates;
  Eigen::MatrixXd K_final;  // R^-1 B^T P of the last iterate
  bool converged = false;
  std::optional<double> final_gap;  // ||K_final - K*||_F when K* was supplied
};

struct KleinmanOptions {
  int i_star = 5;
  /// When set, stop as soon as ||K_{i+1} - K_i||_F <= tol (i_star becomes
  /// the iteration cap).
  std::optional<double> gain_tol;
  /// Reference optimum; fills final_gap.
  std::optional<Eigen::MatrixXd> K_star;
  std::size_t loop = 0;
};

/// i_star rounds of: P_i solves (A - B K_i)^T P + P (A - B K_i) + Q + K_i^T R K_i = 0,
/// then K_{i+1} = R^-1 B^T P_i.
inline KleinmanRun kleinman_iterate(const CareProblem& c, const Eigen::MatrixXd& K0,
                                    const KleinmanOptions& opts) {
  detail::require_dims(K0.rows() == c.m() && K0.cols() == c.n(),
                       "kleinman_iterate: K0 must be m x n");
  if (opts.i_star < 1) throw DimensionError("kleinman_iterate: i_star must be >= 1");

  KleinmanRun run;
  run.loop = opts.loop;
  Eigen::MatrixXd K = K0;
  for (int i = 0; i < opts.i_star; ++i) {
    const Eigen::MatrixXd Ac = c.A - c.B * K;
    const double margin = spectral_abscissa(Ac);
    if (!(margin < -kHurwitzMargin)) {
      std::ostringstream os;
      os << "kleinman_iterate: A - B K_" << i << " is not Hurwitz (spectral abscissa " << margin
         << ")";
      throw NumericalError(os.str());
    }
    const SymMatrix Qi(c.Q.matrix() + K.transpose() * c.R.matrix() * K);
    SymMatrix P = solve_ale_svec(AleProblem(Ac, Qi));
    const double res = ale_residual(Ac, P, Qi);
    Eigen::MatrixXd K_next = c.gain(P);
    run.iterates.push_back({std::move(P), K, res, margin});
    const double step = (K_next - K).norm();
    K = std::move(K_next);
    if (opts.gain_tol && step <= *opts.gain_tol) {
      run.converged = true;
      break;
    }
  }
  run.K_final = K;
  if (!opts.gain_tol) run.converged = true;
  if (opts.K_star) run.final_gap = (run.K_final - *opts.K_star).norm();
  return run;
}

inline KleinmanRun kleinman_iterate(const CareProblem& c, const Eigen::MatrixXd& K0, int i_star) {
  KleinmanOptions o;
  o.i_star = i_star;
  return kleinman_iterate(c, K0, o);
}

inline double min_eigenvalue(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()),
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// P_i - P_{i+1} >= 0 and P_{i+1} - P* >= 0 for all recorded i, with an
/// eigenvalue floor of `floor`. Returns the worst eigenvalue as deviation.
inline CheckResult monotonicity_check(const KleinmanRun& run, const SymMatrix& Pstar,
                                      double floor = -1e-8) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < run.iterates.size(); ++i) {
    const Eigen::MatrixXd& Pi = run.iterates[i].P.matrix();
    worst = std::min(worst, min_eigenvalue(Pi - Pstar.matrix()));
    if (i + 1 < run.iterates.size())
      worst = std::min(worst, min_eigenvalue(Pi - run.iterates[i + 1].P.matrix()));
  }
  return {worst >= floor, worst};
}

inline bool verify_monotonicity(const KleinmanRun& run, const SymMatrix& Pstar) {
  return monotonicity_check(run, Pstar).ok;
}

}  // namespace skron
