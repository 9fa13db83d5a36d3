#pragma once

// Data-driven policy iteration per loop: assemble the least-squares
// regression from trajectory integrals, solve it by SVD, update the gain.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skron/dataset.hpp"
#include "skron/kleinman.hpp"

namespace skron {

/// The four data operators one loop's regression is built from.
struct RegressionData {
  Eigen::MatrixXd delta;  // delta_{x_j,x_j}
  Eigen::MatrixXd Ixx;    // I_{x_j,x_j}
  Eigen::MatrixXd Ixgu;   // I_{x_j, g_j u}
  Eigen::MatrixXd Ixw;    // I_{x_j, w_j}

  Index rows() const { return delta.rows(); }
  Index cols() const { return delta.cols(); }
};

inline RegressionData regression_data(const TrajectoryDataset& ds, std::size_t j) {
  RegressionData d{delta_matrix(ds, j), integral_matrix(ds, j, Integrand::XX),
                   integral_matrix(ds, j, Integrand::XGU), integral_matrix(ds, j, Integrand::XW)};
  return d;
}

/// Data operators seen in coordinates x~_j = S_j x_j.
inline RegressionData modulate_data(const RegressionData& d, const Eigen::MatrixXd& S) {
  return {modulate_rows(d.delta, S), modulate_rows(d.Ixx, S), modulate_rows(d.Ixgu, S),
          modulate_rows(d.Ixw, S)};
}

/// Loop-local model pieces the regression needs: B_jj, Q_j, R_j.
struct LoopModel {
  Eigen::MatrixXd B;
  SymMatrix Q;
  SymMatrix R;

  Index n() const { return B.rows(); }
  Index m() const { return B.cols(); }
};

inline LoopModel loop_model(const DecentralizedPlant& p, std::size_t j) {
  return {p.B_block(j), p.Q_block(j), p.R_block(j)};
}

struct RegressionProblem {
  std::size_t loop = 0;
  int iteration = 0;
  Eigen::MatrixXd A_mat;  // l_j x nbar_j
  Eigen::VectorXd b_vec;  // l_j
  Eigen::MatrixXd K;      // gain the regression was built for
};

/// A_mat = delta - 2 [ I_xx skron(I, B K)^T + I_{x,gu} + I_{x,w} ],
/// b     = -I_xx svec(Q + K^T R K).
inline RegressionProblem assemble_regression(const RegressionData& d, const LoopModel& model,
                                             const Eigen::MatrixXd& K, std::size_t loop = 0,
                                             int iteration = 0) {
  const Index n = model.n(), m = model.m(), nb = tri(n);
  detail::require_dims(model.Q.dim() == n && model.R.dim() == m,
                       "assemble_regression: loop model shapes disagree");
  detail::require_dims(K.rows() == m && K.cols() == n,
                       "assemble_regression: K must be m_j x n_j");
  for (const Eigen::MatrixXd* M : {&d.delta, &d.Ixx, &d.Ixgu, &d.Ixw})
    detail::require_dims(M->cols() == nb && M->rows() == d.delta.rows(),
                         "assemble_regression: data operators must all be l_j x nbar_j");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  RegressionProblem r;
  r.loop = loop;
  r.iteration = iteration;
  r.K = K;
  r.A_mat = d.delta - 2.0 * (mixed_integral(d.Ixx, I, model.B * K) + d.Ixgu + d.Ixw);
  const SymMatrix Qi(model.Q.matrix() + K.transpose() * model.R.matrix() * K);
  r.b_vec = -d.Ixx * svec(Qi).values();
  return r;
}

/// Modulated regression: regressor times skron(S, S)^T, target unchanged.
inline RegressionProblem modulated_regression(const RegressionProblem& r, const Eigen::MatrixXd& S) {
  RegressionProblem out = r;
  out.A_mat = modulate_rows(r.A_mat, S);
  return out;
}

struct RegressionSolution {
  SymMatrix P;
  double kappa = 1.0;
  double residual = 0.0;  // ||A svec(P) - b||
  Eigen::VectorXd singular_values;
};

inline RegressionSolution solve_regression(const RegressionProblem& r, double rank_tol = 1e-10) {
  const Index l = r.A_mat.rows(), nb = r.A_mat.cols();
  if (tri_root(nb) < 1) throw DimensionError("solve_regression: width is not a triangular number");
  detail::require_dims(r.b_vec.size() == l, "solve_regression: b has the wrong length");
  if (l < nb) {
    std::ostringstream os;
    os << "solve_regression: loop " << r.loop << " has l = " << l << " rows but needs >= " << nb;
    throw DimensionError(os.str());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r.A_mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double smax = s(0), smin = s(nb - 1);
  if (!(smax > 0.0) || !(smin > rank_tol * smax)) {
    std::ostringstream os;
    os << "solve_regression: loop " << r.loop << " iteration " << r.iteration
       << " regressor is rank deficient; singular values [" << s.transpose() << "]";
    throw NumericalError(os.str());
  }
  const Eigen::VectorXd x = svd.solve(r.b_vec);
  RegressionSolution out;
  out.P = smat(x);
  out.kappa = smax / smin;
  out.residual = (r.A_mat * x - r.b_vec).norm();
  out.singular_values = s;
  return out;
}

/// K = R^-1 B^T P
inline Eigen::MatrixXd update_gain(const SymMatrix& P, const LoopModel& model) {
  detail::require_dims(P.dim() == model.n(), "update_gain: P does not match the loop");
  return model.R.matrix().llt().solve(model.B.transpose() * P.matrix());
}

struct LearningStep {
  int iteration = 0;
  SymMatrix P;
  Eigen::MatrixXd K;       // gain the regression was built for (K_i)
  Eigen::MatrixXd K_next;  // R^-1 B^T P_i
  double kappa = 1.0;
  double residual = 0.0;
  std::optional<double> gap;  // ||P_i - P_i^Kleinman||_F
};

struct LearningRecord {
  std::string algorithm;
  std::size_t loop = 0;
  std::vector<LearningStep> steps;
  Eigen::MatrixXd K_final;
  std::optional<double> final_gap;  // ||K_final - K*||_F

  double max_kappa() const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& s : steps) v = std::max(v, s.kappa);
    return v;
  }
  double min_kappa() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& s : steps) v = std::min(v, s.kappa);
    return v;
  }
};

/// Reference values a learning run is compared against.
struct LearningOracle {
  std::optional<KleinmanRun> kleinman;
  std::optional<Eigen::MatrixXd> K_star;
};

/// i_star rounds of assemble / solve / update on one fixed loop dataset.
inline LearningRecord learn_loop(const RegressionData& d, const LoopModel& model,
                                 const Eigen::MatrixXd& K0, int i_star, std::size_t loop = 0,
                                 const LearningOracle& oracle = {}) {
  if (i_star < 1) throw DimensionError("learn_loop: i_star must be >= 1");
  LearningRecord rec;
  rec.loop = loop;
  Eigen::MatrixXd K = K0;
  for (int i = 0; i < i_star; ++i) {
    const RegressionProblem r = assemble_regression(d, model, K, loop, i);
    RegressionSolution sol = solve_regression(r);
    LearningStep st;
    st.iteration = i;
    st.K = K;
    st.K_next = update_gain(sol.P, model);
    st.kappa = sol.kappa;
    st.residual = sol.residual;
    if (oracle.kleinman && static_cast<std::size_t>(i) < oracle.kleinman->iterates.size())
      st.gap = (sol.P.matrix() - oracle.kleinman->iterates[static_cast<std::size_t>(i)].P.matrix())
                   .norm();
    st.P = std::move(sol.P);
    K = st.K_next;
    rec.steps.push_back(std::move(st));
  }
  rec.K_final = K;
  if (oracle.K_star) rec.final_gap = (rec.K_final - *oracle.K_star).norm();
  return rec;
}

/// Loop-j block of a full gain.
inline Eigen::MatrixXd gain_block(const Eigen::MatrixXd& K, const LoopPartition& p, std::size_t j) {
  detail::require_dims(K.rows() == p.m_total() && K.cols() == p.n_total(),
                       "gain_block: K must be m x n");
  return K.block(p.input_offset(j), p.state_offset(j), p.m(j), p.n(j));
}

/// Per-loop learning on one dataset. K0 is the full gain used for data
/// collection; each loop starts from its diagonal block, which must
/// stabilize (A_jj, B_jj). Kleinman iterates and K* of (A_jj, B_jj, Q_j, R_j)
/// are attached as oracles.
inline std::vector<LearningRecord> run_eirl(const DecentralizedPlant& plant,
                                            const Eigen::MatrixXd& K0,
                                            const TrajectoryDataset& ds, int i_star,
                                            const std::string& algorithm = "EIRL") {
  if (!(ds.partition == plant.partition))
    throw DimensionError("run_eirl: dataset partition differs from the plant's");
  std::vector<LearningRecord> out;
  for (std::size_t j = 0; j < plant.loops(); ++j) {
    const Eigen::MatrixXd K0j = gain_block(K0, plant.partition, j);
    const CareProblem cj = plant.care_loop(j);
    LearningOracle oracle;
    oracle.kleinman = kleinman_iterate(cj, K0j, i_star);
    oracle.K_star = solve_care_reference(cj).K;
    LearningRecord rec =
        learn_loop(regression_data(ds, j), loop_model(plant, j), K0j, i_star, j, oracle);
    rec.algorithm = algorithm;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace skron
