#pragma once

// Study configuration, runners and report persistence.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skron/io.hpp"
#include "skron/mee.hpp"

namespace skron {

struct StudyTolerances {
  double gap = 1e-6;          // ||K_final - K*||_F
  double equivalence = 1e-6;  // max_i ||P_i - P_i^Kleinman||_F
  double invariance = 1e-8;   // modulated vs plain gain sequences (relative)
};

enum class PlantKind { Lin2d, Synthetic2Loop, Linear };

struct StudyConfig {
  std::string name = "lin2d";
  PlantKind plant = PlantKind::Lin2d;
  SyntheticTwoLoopParams synthetic;
  // PlantKind::Linear
  Eigen::MatrixXd A, B, Q, R;
  std::optional<LoopPartition> loops;  // decentralized partition (required for Linear)

  double Ts = 0.1;  // s
  Index samples = 5;
  int i_star = 5;
  std::optional<Eigen::MatrixXd> K0;  // zero when unset
  std::optional<Eigen::VectorXd> x0;  // zero when unset
  ProbingSignal probing;
  std::optional<ModulationSpec> modulation;  // blocks in the decentralized partition
  std::vector<std::string> variants;
  ModulationPath mee_path = ModulationPath::Algebraic;
  bool expect_kappa_reduction = false;
  StudyTolerances tol;
  OdeOptions ode;
  std::string output_dir = "out";
};

inline const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> v{"EIRL", "EIRL+MEE", "dEIRL", "dEIRL+MEE"};
  return v;
}

/// Two-loop linear setup: A = diag(-1, -0.1), B = I, Q = I, R = diag(1, 10),
/// d1 = cos t, d2 = 0.1 cos 0.1t, K0 = 0, Ts = 0.1 s, l = 5, i* = 5,
/// S = diag(1, 10).
inline StudyConfig lin2d_config() {
  StudyConfig c;
  c.name = "lin2d";
  c.plant = PlantKind::Lin2d;
  c.Ts = 0.1;
  c.samples = 5;
  c.i_star = 5;
  c.probing = ProbingSignal::zero(2);
  c.probing.channels[0].push_back({1.0, 1.0, 0.0});
  c.probing.channels[1].push_back({0.1, 0.1, 0.0});
  c.modulation = ModulationSpec{{Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 10.0)}};
  c.variants = {"EIRL", "EIRL+MEE", "dEIRL"};
  c.expect_kappa_reduction = true;
  c.output_dir = "out/lin2d";
  return c;
}

inline StudyConfig synthetic2loop_config() {
  StudyConfig c;
  c.name = "synthetic2loop";
  c.plant = PlantKind::Synthetic2Loop;
  c.Ts = 1.0;
  c.samples = 20;
  c.i_star = 10;
  c.probing = ProbingSignal::zero(2);
  c.probing.channels[0].push_back({1.0, 1.0, 0.0});
  c.probing.channels[1].push_back({1.0, 0.3, 0.0});
  c.modulation = ModulationSpec::diagonal(LoopPartition({1, 2}, {1, 1}),
                                          Eigen::Vector3d(1.0, 1.0, c.synthetic.rate_scale));
  c.variants = {"dEIRL", "dEIRL+MEE"};
  c.expect_kappa_reduction = true;
  c.output_dir = "out/synthetic2loop";
  return c;
}

/// Plant in its decentralized partition, after every dimension and
/// definiteness check the config implies.
inline DecentralizedPlant build_plant(const StudyConfig& c) {
  DecentralizedPlant p;
  switch (c.plant) {
    case PlantKind::Lin2d:
      p = lin2d_plant(true);
      break;
    case PlantKind::Synthetic2Loop:
      p = synthetic_two_loop_plant(c.synthetic);
      break;
    case PlantKind::Linear: {
      if (!c.loops) throw DimensionError("config: linear plant needs a loop partition");
      detail::require_dims(c.A.rows() == c.A.cols() && c.A.rows() >= 1,
                           "config: A must be square and non-empty");
      detail::require_dims(c.Q.rows() == c.Q.cols() && c.R.rows() == c.R.cols(),
                           "config: Q and R must be square");
      detail::require_dims((c.Q - c.Q.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
                               (c.R - c.R.transpose()).cwiseAbs().maxCoeff() == 0.0,
                           "config: Q and R must be symmetric");
      p = linear_plant(c.name, c.A, c.B, SymMatrix(c.Q), SymMatrix(c.R), *c.loops);
      break;
    }
  }
  (void)p.care();  // whole-plant Q >= 0, R > 0
  return p;
}

struct ValidatedStudy {
  DecentralizedPlant plant;  // decentralized partition
  Eigen::MatrixXd K0;
  Eigen::VectorXd x0;
};

inline ValidatedStudy validate_config(const StudyConfig& c) {
  ValidatedStudy v{build_plant(c), {}, {}};
  const Index n = v.plant.n(), m = v.plant.m();
  v.K0 = c.K0 ? *c.K0 : Eigen::MatrixXd::Zero(m, n);
  v.x0 = c.x0 ? *c.x0 : Eigen::VectorXd::Zero(n);
  detail::require_dims(v.K0.rows() == m && v.K0.cols() == n, "config: K0 must be m x n");
  detail::require_dims(v.x0.size() == n, "config: x0 must have n entries");
  detail::require_dims(c.probing.size() == m, "config: probing needs one channel per input");
  if (!(c.Ts > 0.0)) throw DimensionError("config: Ts must be > 0");
  if (c.i_star < 1) throw DimensionError("config: iterations must be >= 1");
  if (c.variants.empty()) throw DimensionError("config: no variants selected");
  for (const auto& name : c.variants)
    if (std::find(known_variants().begin(), known_variants().end(), name) == known_variants().end())
      throw DimensionError("config: unknown variant '" + name + "'");
  for (const auto& name : c.variants) {
    const bool decentral = name.starts_with("dEIRL");
    const Index nb = decentral ? 0 : tri(n);
    if (!decentral && c.samples < nb)
      throw DimensionError("config: " + name + " needs at least " + std::to_string(nb) + " samples");
    if (decentral)
      for (std::size_t j = 0; j < v.plant.loops(); ++j)
        if (c.samples < tri(v.plant.partition.n(j)))
          throw DimensionError("config: loop " + std::to_string(j + 1) + " needs at least " +
                               std::to_string(tri(v.plant.partition.n(j))) + " samples");
    if (name.ends_with("+MEE")) {
      if (!c.modulation) throw DimensionError("config: " + name + " requires a modulation");
      c.modulation->validate(v.plant.partition);
    }
  }
  if (!is_hurwitz(v.plant.A - v.plant.B * v.K0))
    throw NumericalError("config: A - B K0 is not Hurwitz");
  return v;
}

struct CheckOutcome {
  std::string name;
  bool ok = false;
  double value = 0.0;
  double threshold = 0.0;

  friend bool operator==(const CheckOutcome&, const CheckOutcome&) = default;
};

struct StudyReport {
  std::string study;
  std::vector<LearningRecord> records;
  std::vector<CheckOutcome> checks;
  std::vector<std::pair<std::string, double>> timings;  // variant, seconds

  bool all_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.ok; });
  }
  const LearningRecord* find(const std::string& algorithm, std::size_t loop) const {
    for (const auto& r : records)
      if (r.algorithm == algorithm && r.loop == loop) return &r;
    return nullptr;
  }

  friend bool operator==(const StudyReport&, const StudyReport&) = default;
};

namespace detail {

inline std::string tag(const LearningRecord& r) {
  return r.algorithm + "/loop" + std::to_string(r.loop + 1);
}

inline void record_checks(const LearningRecord& r, const StudyTolerances& tol,
                          std::vector<CheckOutcome>& out) {
  double min_kappa = std::numeric_limits<double>::infinity();
  double worst_gap = 0.0;
  bool finite = r.K_final.allFinite();
  for (const auto& s : r.steps) {
    min_kappa = std::min(min_kappa, s.kappa);
    finite = finite && s.K_next.allFinite() && s.P.matrix().allFinite();
    if (s.gap) worst_gap = std::max(worst_gap, *s.gap);
  }
  out.push_back({"kappa_at_least_one[" + tag(r) + "]", min_kappa >= 1.0, min_kappa, 1.0});
  out.push_back({"finite_gains[" + tag(r) + "]", finite, finite ? 0.0 : 1.0, 0.0});
  if (!r.steps.empty() && r.steps.front().P.dim() == 1) {
    double dev = 0.0;
    for (const auto& s : r.steps) dev = std::max(dev, std::abs(s.kappa - 1.0));
    out.push_back({"unit_kappa[" + tag(r) + "]", dev <= 1e-12, dev, 1e-12});
  }
  out.push_back({"kleinman_equivalence[" + tag(r) + "]", worst_gap <= tol.equivalence, worst_gap,
                 tol.equivalence});
  if (r.final_gap)
    out.push_back({"final_gain_gap[" + tag(r) + "]", *r.final_gap <= tol.gap, *r.final_gap, tol.gap});
}

inline void pair_checks(const LearningRecord& base, const LearningRecord& mod, bool modulated_identity,
                        const StudyConfig& c, std::vector<CheckOutcome>& out) {
  double dev = 0.0;
  for (std::size_t i = 0; i < std::min(base.steps.size(), mod.steps.size()); ++i) {
    const auto& a = base.steps[i];
    const auto& b = mod.steps[i];
    dev = std::max(dev, (a.K_next - b.K_next).norm() / std::max(1.0, a.K_next.norm()));
    dev = std::max(dev, (a.P.matrix() - b.P.matrix()).norm() / std::max(1.0, a.P.matrix().norm()));
  }
  out.push_back({"mee_gain_invariance[" + tag(mod) + "]", dev <= c.tol.invariance, dev,
                 c.tol.invariance});
  if (c.expect_kappa_reduction && !modulated_identity && mod.steps.front().P.dim() > 1)
    out.push_back({"mee_reduces_peak_kappa[" + tag(mod) + "]", mod.max_kappa() < base.max_kappa(),
                   mod.max_kappa() / base.max_kappa(), 1.0});
}

}  // namespace detail

/// Runs every configured variant. When `datasets` is given, the simulated
/// datasets are appended to it.
inline StudyReport run_study(const StudyConfig& c, std::vector<TrajectoryDataset>* datasets = nullptr) {
  const ValidatedStudy v = validate_config(c);
  const DecentralizedPlant& dplant = v.plant;
  const DecentralizedPlant cplant =
      dplant.with_partition(LoopPartition::single(dplant.n(), dplant.m()));

  SampleSpec samples;
  samples.Ts = c.Ts;
  samples.l = c.samples;
  SimulationOptions sim;
  sim.ode = c.ode;

  StudyReport rep;
  rep.study = c.name;
  std::optional<TrajectoryDataset> cdata, ddata;
  using clock = std::chrono::steady_clock;

  for (const auto& name : c.variants) {
    const auto t0 = clock::now();
    const bool decentral = name.starts_with("dEIRL");
    const bool mee = name.ends_with("+MEE");
    const DecentralizedPlant& plant = decentral ? dplant : cplant;
    std::optional<TrajectoryDataset>& data = decentral ? ddata : cdata;
    if (!data) data = simulate_closed_loop(plant, v.K0, c.probing, v.x0, samples, sim);

    std::vector<LearningRecord> recs;
    if (!mee) {
      recs = run_eirl(plant, v.K0, *data, c.i_star, name);
    } else {
      const ModulationSpec spec =
          decentral ? *c.modulation : ModulationSpec{{c.modulation->assembled()}};
      recs = run_eirl_modulated(plant, v.K0, *data, spec, c.i_star, c.mee_path,
                                ModulatedRunInputs{v.x0, c.probing, samples, sim}, name);
    }
    for (auto& r : recs) rep.records.push_back(std::move(r));
    rep.timings.emplace_back(name, std::chrono::duration<double>(clock::now() - t0).count());
  }

  if (datasets) {
    if (cdata) datasets->push_back(*cdata);
    if (ddata) datasets->push_back(*ddata);
  }
  for (const auto& r : rep.records) detail::record_checks(r, c.tol, rep.checks);
  for (const auto& r : rep.records) {
    if (!r.algorithm.ends_with("+MEE")) continue;
    const std::string base = r.algorithm.substr(0, r.algorithm.size() - 4);
    const LearningRecord* b = rep.find(base, r.loop);
    if (!b) continue;
    const bool decentral = base == "dEIRL";
    const bool ident = decentral ? c.modulation->blocks[r.loop].isIdentity(0.0)
                                 : c.modulation->is_identity();
    detail::pair_checks(*b, r, ident, c, rep.checks);
  }
  return rep;
}

inline StudyReport run_study_lin2d(const StudyConfig& c = lin2d_config()) {
  if (c.plant != PlantKind::Lin2d) throw DimensionError("run_study_lin2d: config plant is not lin2d");
  return run_study(c);
}

inline StudyReport run_study_synthetic2loop(const StudyConfig& c = synthetic2loop_config()) {
  if (c.plant != PlantKind::Synthetic2Loop)
    throw DimensionError("run_study_synthetic2loop: config plant is not synthetic2loop");
  return run_study(c);
}

// ---- config JSON ------------------------------------------------------

namespace io {

inline Eigen::MatrixXd rows_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw IoError("config: " + what + " must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd M(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw IoError("config: " + what + " rows must all have the same length");
    for (std::size_t k = 0; k < cols; ++k)
      M(static_cast<Index>(r), static_cast<Index>(k)) = unhex(j[r][k]);
  }
  return M;
}

inline Json rows_to_json(const Eigen::MatrixXd& M) {
  Json out = Json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Index k = 0; k < M.cols(); ++k) row.push_back(M(r, k));
    out.push_back(std::move(row));
  }
  return out;
}

inline ProbingSignal probing_from_config(const Json& j) {
  ProbingSignal d;
  for (const auto& ch : j) {
    std::vector<Sinusoid> terms;
    for (const auto& t : ch)
      terms.push_back({unhex(t.at("amplitude")), unhex(t.at("frequency_rad_s")),
                       t.contains("phase_rad") ? unhex(t.at("phase_rad")) : 0.0});
    d.channels.push_back(std::move(terms));
  }
  return d;
}

/// {"identity": true} | {"diagonal": [..]} | {"degrees_to_radians": [state indices]}
/// | {"blocks": [[[..]], ..]}; blocks follow the decentralized partition.
inline ModulationSpec modulation_from_config(const Json& j, const LoopPartition& p) {
  if (j.contains("identity")) return ModulationSpec::identity(p);
  if (j.contains("diagonal")) return ModulationSpec::diagonal(p, vector_from_json(j.at("diagonal")));
  if (j.contains("degrees_to_radians"))
    return ModulationSpec::degrees_to_radians(p, j.at("degrees_to_radians").get<std::vector<Index>>());
  if (j.contains("blocks")) {
    ModulationSpec s;
    for (const auto& b : j.at("blocks")) s.blocks.push_back(rows_from_json(b, "modulation block"));
    return s;
  }
  throw IoError("config: modulation needs one of identity, diagonal, degrees_to_radians, blocks");
}

}  // namespace io

inline StudyConfig config_from_json(const Json& j) {
  const Json& pj = j.at("plant");
  const std::string kind = pj.at("kind").get<std::string>();
  StudyConfig c;
  if (kind == "lin2d") {
    c = lin2d_config();
  } else if (kind == "synthetic2loop") {
    c = synthetic2loop_config();
    auto& s = c.synthetic;
    s.omega = pj.contains("omega_rad_s") ? io::unhex(pj.at("omega_rad_s")) : s.omega;
    s.zeta = pj.contains("zeta") ? io::unhex(pj.at("zeta")) : s.zeta;
    s.cubic = pj.contains("cubic") ? io::unhex(pj.at("cubic")) : s.cubic;
    s.coupling = pj.contains("coupling") ? io::unhex(pj.at("coupling")) : s.coupling;
    s.bilinear = pj.contains("bilinear") ? io::unhex(pj.at("bilinear")) : s.bilinear;
    s.rate_scale = pj.contains("rate_scale") ? io::unhex(pj.at("rate_scale")) : s.rate_scale;
    c.modulation = ModulationSpec::diagonal(LoopPartition({1, 2}, {1, 1}),
                                            Eigen::Vector3d(1.0, 1.0, s.rate_scale));
  } else if (kind == "linear") {
    c = StudyConfig{};
    c.name = "custom";
    c.plant = PlantKind::Linear;
    c.A = io::rows_from_json(pj.at("A"), "A");
    c.B = io::rows_from_json(pj.at("B"), "B");
    c.Q = io::rows_from_json(pj.at("Q"), "Q");
    c.R = io::rows_from_json(pj.at("R"), "R");
    c.loops = pj.contains("loops") ? io::partition_from_json(pj.at("loops"))
                                   : LoopPartition::single(c.A.rows(), c.B.cols());
    c.variants = {"EIRL"};
    c.output_dir = "out/custom";
  } else {
    throw IoError("config: unknown plant kind '" + kind + "'");
  }

  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  if (j.contains("sampling")) {
    const Json& s = j.at("sampling");
    if (s.contains("Ts_s")) c.Ts = io::unhex(s.at("Ts_s"));
    if (s.contains("samples")) c.samples = s.at("samples").get<Index>();
  }
  if (j.contains("iterations")) c.i_star = j.at("iterations").get<int>();
  if (j.contains("K0")) c.K0 = io::rows_from_json(j.at("K0"), "K0");
  if (j.contains("x0")) c.x0 = io::vector_from_json(j.at("x0"));
  if (j.contains("probing")) c.probing = io::probing_from_config(j.at("probing"));
  if (j.contains("modulation")) {
    const LoopPartition p = c.plant == PlantKind::Linear ? *c.loops : build_plant(c).partition;
    c.modulation = io::modulation_from_config(j.at("modulation"), p);
  }
  if (j.contains("variants")) c.variants = j.at("variants").get<std::vector<std::string>>();
  if (j.contains("mee_path")) {
    const std::string p = j.at("mee_path").get<std::string>();
    if (p == "algebraic") c.mee_path = ModulationPath::Algebraic;
    else if (p == "simulated") c.mee_path = ModulationPath::Simulated;
    else throw IoError("config: mee_path must be 'algebraic' or 'simulated'");
  }
  if (j.contains("expect_kappa_reduction"))
    c.expect_kappa_reduction = j.at("expect_kappa_reduction").get<bool>();
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (t.contains("gap")) c.tol.gap = io::unhex(t.at("gap"));
    if (t.contains("equivalence")) c.tol.equivalence = io::unhex(t.at("equivalence"));
    if (t.contains("invariance")) c.tol.invariance = io::unhex(t.at("invariance"));
  }
  if (j.contains("integrator")) {
    const Json& t = j.at("integrator");
    if (t.contains("rel_tol")) c.ode.rel_tol = io::unhex(t.at("rel_tol"));
    if (t.contains("abs_tol")) c.ode.abs_tol = io::unhex(t.at("abs_tol"));
    if (t.contains("divergence_bound")) c.ode.divergence_bound = io::unhex(t.at("divergence_bound"));
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  return c;
}

inline StudyConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(io::parse(io::read_text(path), path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const IoError& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw IoError(path.string() + ": " + what);
  }
}

// ---- report output ----------------------------------------------------

inline std::string report_table_csv(const StudyReport& r) {
  if (r.records.empty()) throw IoError("report: no learning records to write");
  std::string out = "algorithm,loop,max_kappa,min_kappa\n";
  for (const auto& rec : r.records)
    out += rec.algorithm + "," + std::to_string(rec.loop + 1) + "," + io::fixed(rec.max_kappa(), 2) +
           "," + io::fixed(rec.min_kappa(), 2) + "\n";
  return out;
}

inline std::string report_series_csv(const StudyReport& r) {
  if (r.records.empty()) throw IoError("report: no learning records to write");
  std::string out = "algorithm,loop,iteration,kappa\n";
  for (const auto& rec : r.records)
    for (const auto& s : rec.steps)
      out += rec.algorithm + "," + std::to_string(rec.loop + 1) + "," + std::to_string(s.iteration) +
             "," + io::full(s.kappa) + "\n";
  return out;
}

inline Json report_to_json(const StudyReport& r) {
  if (r.records.empty()) throw IoError("report: no learning records to write");
  Json recs = Json::array();
  for (const auto& rec : r.records) recs.push_back(record_to_json(rec));
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"ok", c.ok}, {"value", io::hex(c.value)},
                      {"threshold", io::hex(c.threshold)}});
  Json timings = Json::array();
  for (const auto& [name, sec] : r.timings) timings.push_back({{"variant", name}, {"seconds", io::hex(sec)}});
  return {{"format", "skron-report-1"},
          {"study", r.study},
          {"records", std::move(recs)},
          {"checks", std::move(checks)},
          {"timings", std::move(timings)}};
}

inline StudyReport report_from_json(const Json& j) {
  if (j.value("format", "") != "skron-report-1") throw IoError("report: unknown or missing format tag");
  StudyReport r;
  r.study = j.at("study").get<std::string>();
  for (const auto& rec : j.at("records")) r.records.push_back(record_from_json(rec));
  for (const auto& c : j.at("checks"))
    r.checks.push_back({c.at("name").get<std::string>(), c.at("ok").get<bool>(),
                        io::unhex(c.at("value")), io::unhex(c.at("threshold"))});
  for (const auto& t : j.at("timings"))
    r.timings.emplace_back(t.at("variant").get<std::string>(), io::unhex(t.at("seconds")));
  if (r.records.empty()) throw IoError("report: no learning records");
  return r;
}

inline std::string file_slug(const std::string& algorithm) {
  std::string s;
  for (char ch : algorithm) s += ch == '+' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

enum class ReportFormat { Csv, Json, All };

/// Writes table.csv, kappa_series.csv, one record CSV per learning record and
/// report.json (as selected) into `dir`. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const StudyReport& r,
                                                      const std::filesystem::path& dir,
                                                      ReportFormat format = ReportFormat::All) {
  if (r.records.empty()) throw IoError("emit_report: no learning records; refusing to write empty report");
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  if (format != ReportFormat::Json) {
    files.emplace_back(dir / "table.csv", report_table_csv(r));
    files.emplace_back(dir / "kappa_series.csv", report_series_csv(r));
    for (const auto& rec : r.records)
      files.emplace_back(dir / ("record_" + file_slug(rec.algorithm) + "_loop" +
                                std::to_string(rec.loop + 1) + ".csv"),
                         record_to_csv(rec));
  }
  if (format != ReportFormat::Csv) files.emplace_back(dir / "report.json", report_to_json(r).dump(2) + "\n");
  std::vector<std::filesystem::path> written;
  for (const auto& [path, text] : files) {
    io::write_text(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace skron
