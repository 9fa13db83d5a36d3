// Acceptance run: one PASS/FAIL line per criterion, all tolerances pinned
// here. Exit status is 0 when every failure is listed in kExpectedFailures
// and every listed failure actually fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fuzz.hpp"
#include "skron/skron.hpp"

namespace {

using namespace skron;
using clock_type = std::chrono::steady_clock;

// Algebra
constexpr int kAlgebraCases = 1000;
constexpr std::uint64_t kAlgebraSeed = 20240601;
constexpr double kFixedCaseTol = 1e-12;
constexpr double kAlgebraSeconds = 30.0;
// ALE
constexpr int kAleCases = 100;
constexpr Index kAleMaxDim = 8;
constexpr double kAleTol = 1e-8;
constexpr int kSolvabilityCases = 100;
constexpr double kSingularCondition = 1e12;
// Kleinman
constexpr double kKleinmanGainTol = 1e-8;
constexpr int kMonotonicityCases = 50;
constexpr double kEigenFloor = -1e-8;
// Learning
constexpr double kEquivalenceTol = 1e-6;
constexpr double kKappaBand = 0.10;
constexpr double kGapTol = 1e-6;
constexpr double kStudySeconds = 60.0;
// Modulation
constexpr double kRegressorTol = 1e-9;
constexpr double kGainInvarianceTol = 1e-8;
constexpr int kModulationCases = 25;
constexpr double kMinReductionFactor = 5.0;

struct KappaRow {
  const char* algorithm;
  std::size_t loop;
  double max_kappa;
  double min_kappa;
};
// Published condition numbers for the two-loop first-order example.
constexpr KappaRow kReferenceKappa[] = {
    {"EIRL", 0, 138.47, 36.04},
    {"EIRL+MEE", 0, 14.05, 7.14},
    {"dEIRL", 0, 1.00, 1.00},
    {"dEIRL", 1, 1.00, 1.00},
};

// Sub-checks known to be unattainable; see README (kappa reproduction).
const std::set<std::string> kExpectedFailures = {"5:kappa_table_eirl_rows"};

struct Criterion {
  int id;
  std::string title;
  std::vector<std::pair<std::string, bool>> parts;  // sub-check name, ok
  std::vector<std::string> notes;

  void part(const std::string& name, bool ok, const std::string& note) {
    parts.emplace_back(name, ok);
    notes.push_back(name + ": " + note);
  }
  bool ok() const {
    for (const auto& [n, ok] : parts)
      if (!ok) return false;
    return true;
  }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Criterion algebra() {
  Criterion c{1, "symmetric Kronecker algebra property suite", {}, {}};
  const auto t0 = clock_type::now();
  AlgebraSuiteOptions opts;
  opts.cases = kAlgebraCases;
  opts.seed = kAlgebraSeed;
  const AlgebraSuiteResult res = run_algebra_suite(opts);
  const auto fixed = algebra_fixed_cases(kFixedCaseTol);
  const double secs = seconds_since(t0);
  long failed = 0, passed = 0;
  for (const auto& p : res.properties) failed += p.failed, passed += p.passed;
  c.part("random_properties", res.ok() && res.cases == kAlgebraCases,
         fmt("%.0f checks passed, %.0f failed over %.0f cases", double(passed), double(failed),
             double(res.cases)));
  long ffail = 0;
  double fworst = 0.0;
  for (const auto& p : fixed) ffail += p.failed, fworst = std::max(fworst, p.worst);
  c.part("fixed_counterexamples", ffail == 0 && !fixed.empty(),
         fmt("%.0f fixed properties, worst deviation %.2e (tol %.0e)", double(fixed.size()), fworst,
             kFixedCaseTol));
  c.part("runtime", secs < kAlgebraSeconds, fmt("%.2f s (limit %.0f s)", secs, kAlgebraSeconds));
  return c;
}

Criterion ale() {
  Criterion c{2, "ALE cross-oracle and solvability predicate", {}, {}};
  fuzz::Rng g(7001);
  double worst = 0.0;
  int ok_cases = 0;
  for (int k = 0; k < kAleCases; ++k) {
    const Index n = fuzz::pick(g, 1, kAleMaxDim);
    const AleProblem p(fuzz::hurwitz(g, n), fuzz::spd(g, n));
    const SymMatrix a = solve_ale_svec(p);
    const SymMatrix b = solve_ale_integral(p);
    const double d = rel(a.matrix(), b.matrix());
    worst = std::max(worst, d);
    ok_cases += d <= kAleTol;
  }
  c.part("svec_vs_integral", ok_cases == kAleCases,
         fmt("%.0f/100 agree, worst relative gap %.2e (tol %.0e)", ok_cases, worst, kAleTol));

  // Half the draws place an eigenvalue pair with l_i + l_j = 0 (including a
  // zero eigenvalue), half are generic real spectra.
  int agree = 0, singular = 0;
  for (int k = 0; k < kSolvabilityCases; ++k) {
    const Index n = fuzz::pick(g, 2, 6);
    Eigen::VectorXd lam(n);
    for (Index i = 0; i < n; ++i) lam(i) = fuzz::uniform(g, -3.0, 3.0);
    if (k % 2 == 0) {
      const Index i = fuzz::pick(g, 0, n - 1), j = fuzz::pick(g, 0, n - 1);
      if (i == j) lam(i) = 0.0;
      else lam(j) = -lam(i);
    }
    const Eigen::MatrixXd V = fuzz::conditioned(g, n, 0.5, 2.0);
    const Eigen::MatrixXd A = V * lam.asDiagonal() * V.inverse();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(skron_sum(A.transpose(), A.transpose()));
    const auto& sv = svd.singularValues();
    const bool invertible = sv(sv.size() - 1) > 0.0 && sv(0) / sv(sv.size() - 1) < kSingularCondition;
    const bool predicate = ale_unique_solvable(A);
    singular += !invertible;
    agree += predicate == invertible;
  }
  c.part("solvability_predicate", agree == kSolvabilityCases,
         fmt("%.0f/100 agree with cond(skron_sum) < 1e12 (%.0f singular draws)", agree, singular));
  return c;
}

Criterion kleinman() {
  Criterion c{3, "Kleinman convergence and monotonicity", {}, {}};
  const CareProblem lin2d = lin2d_plant(false).care();
  const KleinmanRun run = kleinman_iterate(lin2d, Eigen::MatrixXd::Zero(2, 2), 5);
  Eigen::MatrixXd Kstar = Eigen::MatrixXd::Zero(2, 2);
  Kstar(0, 0) = std::sqrt(2.0) - 1.0;
  Kstar(1, 1) = (std::sqrt(11.0) - 1.0) / 10.0;
  const double gap = (run.K_final - Kstar).norm();
  c.part("lin2d_gain", gap <= kKleinmanGainTol,
         fmt("||K_5 - K*||_F = %.3e (tol %.0e)", gap, kKleinmanGainTol));

  fuzz::Rng g(7003);
  int ok = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kMonotonicityCases; ++k) {
    const Index n = fuzz::pick(g, 1, 6), m = fuzz::pick(g, 1, n);
    const Eigen::MatrixXd A = fuzz::gaussian(g, n, n);
    const Eigen::MatrixXd B = fuzz::gaussian(g, n, m);
    const CareProblem p = fuzz::normalized_care(A, B, fuzz::spd(g, n), fuzz::spd(g, m, 0.5));
    // Stabilizing start: LQR gain of a differently weighted problem.
    const CareProblem other(A, B, SymMatrix(10.0 * Eigen::MatrixXd::Identity(n, n)),
                            SymMatrix::identity(m));
    const Eigen::MatrixXd K0 = solve_care_reference(other).K;
    const KleinmanRun r = kleinman_iterate(p, K0, 8);
    const CheckResult mono = monotonicity_check(r, solve_care_reference(p).P, kEigenFloor);
    worst = std::min(worst, mono.deviation);
    ok += mono.ok;
  }
  c.part("monotonicity", ok == kMonotonicityCases,
         fmt("%.0f/50 problems, smallest eigenvalue %.2e (floor %.0e)", ok, worst, kEigenFloor));
  return c;
}

Criterion equivalence(const StudyReport& rep) {
  Criterion c{4, "learned iterates equal Kleinman iterates (lin2d, EIRL)", {}, {}};
  const LearningRecord* rec = rep.find("EIRL", 0);
  if (!rec) {
    c.part("record_present", false, "no EIRL record");
    return c;
  }
  const KleinmanRun run = kleinman_iterate(lin2d_plant(false).care(), Eigen::MatrixXd::Zero(2, 2), 5);
  double worst = 0.0;
  for (const auto& s : rec->steps)
    worst = std::max(worst, (s.P.matrix() - run.iterates.at(static_cast<std::size_t>(s.iteration)).P.matrix()).norm());
  c.part("max_P_gap", worst <= kEquivalenceTol && rec->steps.size() == 5,
         fmt("max_i ||P_i - P_i^Kleinman||_F = %.3e (tol %.0e)", worst, kEquivalenceTol));
  return c;
}

Criterion table(const StudyReport& rep, double secs) {
  Criterion c{5, "condition-number table reproduction (lin2d)", {}, {}};
  bool eirl_ok = true, deirl_ok = true;
  std::string eirl_note, deirl_note;
  for (const auto& row : kReferenceKappa) {
    const LearningRecord* r = rep.find(row.algorithm, row.loop);
    if (!r) {
      (row.algorithm[0] == 'd' ? deirl_ok : eirl_ok) = false;
      continue;
    }
    const double mx = r->max_kappa(), mn = r->min_kappa();
    const std::string line = std::string(row.algorithm) + "/" + std::to_string(row.loop + 1) +
                             fmt(" max %.2f (ref %.2f) min %.2f", mx, row.max_kappa, mn) +
                             fmt(" (ref %.2f); ", row.min_kappa);
    if (row.algorithm[0] == 'd') {
      deirl_ok = deirl_ok && io::fixed(mx, 2) == "1.00" && io::fixed(mn, 2) == "1.00";
      deirl_note += line;
    } else {
      eirl_ok = eirl_ok && std::abs(mx / row.max_kappa - 1.0) <= kKappaBand &&
                std::abs(mn / row.min_kappa - 1.0) <= kKappaBand;
      eirl_note += line;
    }
  }
  c.part("kappa_table_eirl_rows", eirl_ok, eirl_note + "band +-10%");
  c.part("kappa_table_deirl_rows", deirl_ok, deirl_note + "must print 1.00");
  double worst = 0.0;
  bool all = !rep.records.empty();
  for (const auto& r : rep.records) {
    all = all && r.final_gap.has_value();
    if (r.final_gap) worst = std::max(worst, *r.final_gap);
  }
  c.part("final_gain_gaps", all && worst <= kGapTol,
         fmt("worst ||K_final - K*||_F = %.3e (tol %.0e)", worst, kGapTol));
  c.part("runtime", secs < kStudySeconds, fmt("%.2f s (limit %.0f s)", secs, kStudySeconds));
  return c;
}

struct DualPathOutcome {
  double regressor = 0.0;  // algebraic vs simulated operators
  double gains = 0.0;      // back-transformed vs unmodulated, algebraic path
  double gains_simulated = 0.0;
};

double max_step_gap(const LearningRecord& a, const LearningRecord& b) {
  double d = rel(b.K_final, a.K_final);
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    d = std::max(d, rel(b.steps[i].K_next, a.steps[i].K_next));
    d = std::max(d, rel(b.steps[i].P.matrix(), a.steps[i].P.matrix()));
  }
  return d;
}

DualPathOutcome dual_path(const DecentralizedPlant& plant, const Eigen::MatrixXd& K0,
                          const ProbingSignal& d, const Eigen::VectorXd& x0, const SampleSpec& samples,
                          const ModulationSpec& spec, int i_star) {
  DualPathOutcome out;
  const TrajectoryDataset ds = simulate_closed_loop(plant, K0, d, x0, samples);
  const Eigen::MatrixXd S = spec.assembled();
  const DecentralizedPlant mp = modulate_problem(plant, spec);
  const TrajectoryDataset ms = simulate_closed_loop(mp, K0 * S.inverse(), d, S * x0, samples);
  for (std::size_t j = 0; j < plant.loops(); ++j) {
    const RegressionData alg = modulate_data(regression_data(ds, j), spec.blocks[j]);
    const RegressionData sim = regression_data(ms, j);
    for (auto [a, b] : {std::pair{&alg.delta, &sim.delta}, {&alg.Ixx, &sim.Ixx},
                        {&alg.Ixgu, &sim.Ixgu}, {&alg.Ixw, &sim.Ixw}})
      out.regressor = std::max(out.regressor, rel(*b, *a));
    const LoopModel model = loop_model(mp, j);
    const Eigen::MatrixXd K0t = gain_block(K0 * S.inverse(), plant.partition, j);
    out.regressor = std::max(out.regressor, rel(assemble_regression(sim, model, K0t).A_mat,
                                                assemble_regression(alg, model, K0t).A_mat));
  }
  const auto base = run_eirl(plant, K0, ds, i_star);
  const auto alg = run_eirl_modulated(plant, K0, ds, spec, i_star, ModulationPath::Algebraic);
  const auto sim = run_eirl_modulated(plant, K0, ds, spec, i_star, ModulationPath::Simulated,
                                      ModulatedRunInputs{x0, d, samples, {}});
  for (std::size_t j = 0; j < base.size(); ++j) {
    out.gains = std::max(out.gains, max_step_gap(base[j], alg[j]));
    out.gains_simulated = std::max(out.gains_simulated, max_step_gap(base[j], sim[j]));
  }
  return out;
}

Criterion invariance() {
  Criterion c{6, "modulation invariance, algebraic vs simulated data paths", {}, {}};
  const StudyConfig cfg = lin2d_config();
  const DecentralizedPlant central = lin2d_plant(false);
  SampleSpec samples;
  samples.Ts = cfg.Ts;
  samples.l = cfg.samples;
  const ModulationSpec spec{{cfg.modulation->assembled()}};
  const DualPathOutcome l2 = dual_path(central, Eigen::MatrixXd::Zero(2, 2), cfg.probing,
                                       Eigen::VectorXd::Zero(2), samples, spec, cfg.i_star);
  c.part("lin2d_regressors", l2.regressor <= kRegressorTol,
         fmt("relative operator gap %.2e (tol %.0e)", l2.regressor, kRegressorTol));
  c.part("lin2d_gains", l2.gains <= kGainInvarianceTol && l2.gains_simulated <= kGainInvarianceTol,
         fmt("back-transformed gain gap %.2e (tol %.0e), simulated path %.2e", l2.gains,
             kGainInvarianceTol, l2.gains_simulated));

  fuzz::Rng g(7006);
  double wr = 0.0, wg = 0.0, ws = 0.0;
  int ok = 0;
  for (int k = 0; k < kModulationCases; ++k) {
    const fuzz::LinearInstance inst = fuzz::linear_instance(g);
    const DualPathOutcome o =
        dual_path(inst.plant, inst.K0, inst.probing, inst.x0, inst.samples, inst.modulation, 6);
    wr = std::max(wr, o.regressor);
    wg = std::max(wg, o.gains);
    ws = std::max(ws, o.gains_simulated);
    ok += o.regressor <= kRegressorTol && o.gains <= kGainInvarianceTol &&
          o.gains_simulated <= kGainInvarianceTol;
  }
  c.part("fuzzed_instances", ok == kModulationCases,
         fmt("%.0f/25 pass; worst operator gap %.2e, worst gain gap %.2e", ok, wr, wg) +
             fmt(" (simulated path %.2e)", ws));
  return c;
}

Criterion reduction(const StudyReport& rep) {
  Criterion c{7, "modulation reduces peak condition number (lin2d, S = diag(1, 10))", {}, {}};
  const LearningRecord* a = rep.find("EIRL", 0);
  const LearningRecord* b = rep.find("EIRL+MEE", 0);
  const double f = a && b ? a->max_kappa() / b->max_kappa() : 0.0;
  c.part("factor", f >= kMinReductionFactor,
         fmt("peak kappa %.2f -> %.2f, factor %.2f", a ? a->max_kappa() : 0.0, b ? b->max_kappa() : 0.0, f) +
             fmt(" (need >= %.0f)", kMinReductionFactor));
  return c;
}

Criterion synthetic() {
  Criterion c{8, "synthetic two-loop nonlinear plant: modulation effect", {}, {}};
  StudyConfig cfg = synthetic2loop_config();
  cfg.mee_path = ModulationPath::Simulated;
  const StudyReport rep = run_study(cfg);
  double peak_base = 0.0, peak_mod = 0.0, gain = 0.0;
  bool strict = true;
  std::string note;
  for (std::size_t j = 0; j < 2; ++j) {
    const LearningRecord* a = rep.find("dEIRL", j);
    const LearningRecord* b = rep.find("dEIRL+MEE", j);
    if (!a || !b) return c.part("records_present", false, "missing record"), c;
    peak_base = std::max(peak_base, a->max_kappa());
    peak_mod = std::max(peak_mod, b->max_kappa());
    if (!cfg.modulation->blocks[j].isIdentity(0.0)) strict = strict && b->max_kappa() < a->max_kappa();
    gain = std::max(gain, rel(b->K_final, a->K_final));
    note += fmt("loop %.0f: %.2f -> %.2f; ", double(j + 1), a->max_kappa(), b->max_kappa());
  }
  c.part("peak_kappa_strictly_lower", strict && peak_mod < peak_base,
         note + fmt("overall %.2f -> %.2f", peak_base, peak_mod));
  c.part("final_gains_preserved", gain <= kGainInvarianceTol,
         fmt("relative final-gain gap %.2e (tol %.0e)", gain, kGainInvarianceTol));
  c.part("study_checks", rep.all_ok(), "run_study invariant checks");
  return c;
}

}  // namespace

int main() {
  std::vector<Criterion> results;
  const auto guarded = [&](int id, const char* title, const std::function<Criterion()>& f) {
    try {
      results.push_back(f());
    } catch (const std::exception& e) {
      Criterion c{id, title, {}, {}};
      c.part("exception", false, e.what());
      results.push_back(c);
    }
  };

  guarded(1, "algebra", algebra);
  guarded(2, "ale", ale);
  guarded(3, "kleinman", kleinman);

  StudyReport lin2d;
  double lin2d_secs = 0.0;
  try {
    const auto t0 = clock_type::now();
    lin2d = run_study_lin2d();
    lin2d_secs = seconds_since(t0);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lin2d study failed: %s\n", e.what());
  }
  guarded(4, "equivalence", [&] { return equivalence(lin2d); });
  guarded(5, "table", [&] { return table(lin2d, lin2d_secs); });
  guarded(6, "invariance", invariance);
  guarded(7, "reduction", [&] { return reduction(lin2d); });
  guarded(8, "synthetic", synthetic);

  int unexpected = 0;
  std::set<std::string> seen_expected;
  for (const auto& c : results) {
    std::printf("%s %d %s\n", c.ok() ? "PASS" : "FAIL", c.id, c.title.c_str());
    for (std::size_t k = 0; k < c.parts.size(); ++k) {
      const std::string key = std::to_string(c.id) + ":" + c.parts[k].first;
      const bool expected = kExpectedFailures.count(key) > 0;
      if (!c.parts[k].second) {
        if (expected) seen_expected.insert(key);
        else ++unexpected;
      }
      std::printf("    [%s%s] %s\n", c.parts[k].second ? "ok" : "FAILED",
                  !c.parts[k].second && expected ? ", expected" : "", c.notes[k].c_str());
    }
  }
  for (const auto& key : kExpectedFailures)
    if (!seen_expected.count(key)) {
      std::printf("expected failure %s now passes; update kExpectedFailures\n", key.c_str());
      ++unexpected;
    }
  std::printf("%d unexpected outcome(s)\n", unexpected);
  return unexpected == 0 ? 0 : 1;
}
