#pragma once

// State modulation x~ = S x with block-diagonal S: transformed plants and
// regressions, back-transformation of learned iterates, and the modulated
// learning runs (algebraic and simulated data paths).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "skron/eirl.hpp"

namespace skron {

inline constexpr double kMaxModulationCondition = 1e12;

/// One invertible S_j per loop; S = blockdiag(S_1, ..., S_N).
struct ModulationSpec {
  std::vector<Eigen::MatrixXd> blocks;

  static ModulationSpec identity(const LoopPartition& p) {
    ModulationSpec s;
    for (std::size_t j = 0; j < p.loops(); ++j)
      s.blocks.push_back(Eigen::MatrixXd::Identity(p.n(j), p.n(j)));
    return s;
  }

  /// Per-state scaling; `scale` has one entry per plant state.
  static ModulationSpec diagonal(const LoopPartition& p, const Eigen::VectorXd& scale) {
    detail::require_dims(scale.size() == p.n_total(),
                         "ModulationSpec::diagonal: need one scale per state");
    ModulationSpec s;
    for (std::size_t j = 0; j < p.loops(); ++j)
      s.blocks.push_back(scale.segment(p.state_offset(j), p.n(j)).asDiagonal().toDenseMatrix());
    return s;
  }

  /// Degree -> radian conversion (pi/180) on the listed state indices.
  static ModulationSpec degrees_to_radians(const LoopPartition& p, const std::vector<Index>& states) {
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(p.n_total());
    for (Index i : states) {
      detail::require_dims(i >= 0 && i < p.n_total(),
                           "ModulationSpec::degrees_to_radians: state index out of range");
      scale(i) = std::numbers::pi / 180.0;
    }
    return diagonal(p, scale);
  }

  /// Shape and conditioning checks against a partition.
  void validate(const LoopPartition& p) const {
    if (blocks.size() != p.loops())
      throw DimensionError("ModulationSpec: need one block per loop (block-diagonal S only)");
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      const Eigen::MatrixXd& S = blocks[j];
      if (S.rows() != p.n(j) || S.cols() != p.n(j))
        throw DimensionError("ModulationSpec: block " + std::to_string(j) +
                             " does not match loop state dimension");
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(S);
      const auto& sv = svd.singularValues();
      const double smin = sv(sv.size() - 1);
      if (!(smin > 0.0) || !(sv(0) / smin < kMaxModulationCondition)) {
        std::ostringstream os;
        os << "ModulationSpec: block " << j << " is singular or too ill-conditioned (cond "
           << (smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity()) << ")";
        throw NumericalError(os.str());
      }
    }
  }

  Eigen::MatrixXd assembled() const {
    Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
    Index o = 0;
    for (const auto& b : blocks) {
      S.block(o, o, b.rows(), b.cols()) = b;
      o += b.rows();
    }
    return S;
  }

  bool is_identity() const {
    for (const auto& b : blocks)
      if (!b.isIdentity(0.0)) return false;
    return true;
  }
};

/// (A, B, Q, R) -> (S A S^-1, S B, S^-T Q S^-1, R).
inline CareProblem modulate_care(const CareProblem& c, const Eigen::MatrixXd& S) {
  detail::require_dims(S.rows() == c.n() && S.cols() == c.n(), "modulate_care: S must be n x n");
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(S);
  const Eigen::MatrixXd Si = lu.inverse();
  return CareProblem(S * c.A * Si, S * c.B, SymMatrix(Si.transpose() * c.Q.matrix() * Si), c.R);
}

/// Plant in coordinates x~ = S x: f~ = S f(S^-1 x~), g~ = S g(S^-1 x~).
inline DecentralizedPlant modulate_problem(const DecentralizedPlant& plant,
                                           const ModulationSpec& spec) {
  spec.validate(plant.partition);
  const Eigen::MatrixXd S = spec.assembled();
  const Eigen::MatrixXd Si = S.partialPivLu().inverse();
  DecentralizedPlant out;
  out.name = plant.name + "~";
  out.partition = plant.partition;
  out.f = [S, Si, f = plant.f](const Eigen::VectorXd& xt) {
    return Eigen::VectorXd(S * f(Si * xt));
  };
  out.g = [S, Si, g = plant.g](const Eigen::VectorXd& xt) {
    return Eigen::MatrixXd(S * g(Si * xt));
  };
  out.A = S * plant.A * Si;
  out.B = S * plant.B;
  out.Q = SymMatrix(Si.transpose() * plant.Q.matrix() * Si);
  out.R = plant.R;
  out.validate_structure();
  return out;
}

struct BackTransformed {
  SymMatrix P;
  Eigen::MatrixXd K;
};

/// P = S^T P~ S, K = K~ S.
inline BackTransformed back_transform(const SymMatrix& Pt, const Eigen::MatrixXd& Kt,
                                      const Eigen::MatrixXd& S) {
  detail::require_dims(S.rows() == S.cols() && Pt.dim() == S.rows() && Kt.cols() == S.rows(),
                       "back_transform: shape mismatch");
  return {SymMatrix(S.transpose() * Pt.matrix() * S), Kt * S};
}

/// Kleinman on (A, B, Q, R) and on the modulated data; all iterates must
/// agree after back-transformation. Deviation is the worst relative
/// Frobenius difference over P_i and K_i.
inline CheckResult ale_modulation_invariance(const CareProblem& c, const Eigen::MatrixXd& S,
                                             const Eigen::MatrixXd& K0, int i_star,
                                             double tol = 1e-8) {
  const KleinmanRun base = kleinman_iterate(c, K0, i_star);
  const Eigen::MatrixXd Si = S.partialPivLu().inverse();
  const KleinmanRun mod = kleinman_iterate(modulate_care(c, S), K0 * Si, i_star);
  double worst = 0.0;
  for (std::size_t i = 0; i < base.iterates.size(); ++i) {
    const auto& a = base.iterates[i];
    const auto& b = mod.iterates[i];
    const BackTransformed bt = back_transform(b.P, b.K, S);
    worst = std::max(worst, (bt.P.matrix() - a.P.matrix()).norm() / std::max(1.0, a.P.matrix().norm()));
    worst = std::max(worst, (bt.K - a.K).norm() / std::max(1.0, a.K.norm()));
  }
  worst = std::max(worst, (mod.K_final * S - base.K_final).norm() / std::max(1.0, base.K_final.norm()));
  return {worst <= tol, worst};
}

inline bool verify_ale_modulation_invariance(const CareProblem& c, const ModulationSpec& spec,
                                             const Eigen::MatrixXd& K0, int i_star) {
  return ale_modulation_invariance(c, spec.assembled(), K0, i_star).ok;
}

/// Learn loop j in modulated coordinates from already-modulated data and map
/// every iterate back: P_i = S^T P~_i S, K_i = K~_i S. Kappa stays that of
/// the modulated regressor.
inline LearningRecord learn_loop_modulated(const RegressionData& modulated, const LoopModel& model,
                                           const Eigen::MatrixXd& S, const Eigen::MatrixXd& K0,
                                           int i_star, std::size_t loop,
                                           const LearningOracle& oracle = {}) {
  const Eigen::MatrixXd Si = S.partialPivLu().inverse();
  const LoopModel mod{S * model.B, SymMatrix(Si.transpose() * model.Q.matrix() * Si), model.R};
  LearningRecord rec = learn_loop(modulated, mod, K0 * Si, i_star, loop);
  for (auto& st : rec.steps) {
    BackTransformed bt = back_transform(st.P, st.K, S);
    st.P = std::move(bt.P);
    st.K = std::move(bt.K);
    st.K_next = st.K_next * S;
    if (oracle.kleinman && static_cast<std::size_t>(st.iteration) < oracle.kleinman->iterates.size())
      st.gap = (st.P.matrix() -
                oracle.kleinman->iterates[static_cast<std::size_t>(st.iteration)].P.matrix())
                   .norm();
  }
  rec.K_final = rec.K_final * S;
  if (oracle.K_star) rec.final_gap = (rec.K_final - *oracle.K_star).norm();
  return rec;
}

enum class ModulationPath { Algebraic, Simulated };

struct ModulatedRunInputs {
  Eigen::VectorXd x0;
  ProbingSignal probing;
  SampleSpec samples;
  SimulationOptions sim;
};

/// Modulated learning per loop. Algebraic: transform the original dataset's
/// operators by skron(S_j, S_j)^T. Simulated: integrate the modulated plant
/// from S x0 under K0 S^-1 and the same probing signal.
inline std::vector<LearningRecord> run_eirl_modulated(const DecentralizedPlant& plant,
                                                      const Eigen::MatrixXd& K0,
                                                      const TrajectoryDataset& ds,
                                                      const ModulationSpec& spec, int i_star,
                                                      ModulationPath path,
                                                      const ModulatedRunInputs& sim_inputs = {},
                                                      const std::string& algorithm = "EIRL+MEE") {
  spec.validate(plant.partition);
  std::optional<TrajectoryDataset> sim_ds;
  if (path == ModulationPath::Simulated) {
    const Eigen::MatrixXd S = spec.assembled();
    const DecentralizedPlant mp = modulate_problem(plant, spec);
    sim_ds = simulate_closed_loop(mp, K0 * S.partialPivLu().inverse(), sim_inputs.probing,
                                  S * sim_inputs.x0, sim_inputs.samples, sim_inputs.sim);
  }
  std::vector<LearningRecord> out;
  for (std::size_t j = 0; j < plant.loops(); ++j) {
    const Eigen::MatrixXd& Sj = spec.blocks[j];
    const Eigen::MatrixXd K0j = gain_block(K0, plant.partition, j);
    const CareProblem cj = plant.care_loop(j);
    LearningOracle oracle;
    oracle.kleinman = kleinman_iterate(cj, K0j, i_star);
    oracle.K_star = solve_care_reference(cj).K;
    const RegressionData data = path == ModulationPath::Algebraic
                                    ? modulate_data(regression_data(ds, j), Sj)
                                    : regression_data(*sim_ds, j);
    LearningRecord rec =
        learn_loop_modulated(data, loop_model(plant, j), Sj, K0j, i_star, j, oracle);
    rec.algorithm = algorithm;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace skron
