// Command-line harness: algebra property suite and learning studies.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skron/skron.hpp"

namespace {

using namespace skron;

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitError = 2;

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw DimensionError("bad number '" + item + "' in list");
    out.push_back(v);
  }
  if (out.empty()) throw DimensionError("empty list");
  return out;
}

/// identity | diag:a,b,... | deg2rad:i,j,...
ModulationSpec parse_modulation(const std::string& arg, const LoopPartition& p) {
  if (arg == "identity") return ModulationSpec::identity(p);
  if (arg.rfind("diag:", 0) == 0) {
    const auto v = parse_list(arg.substr(5));
    return ModulationSpec::diagonal(p, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Index>(v.size())));
  }
  if (arg.rfind("deg2rad:", 0) == 0) {
    std::vector<Index> idx;
    for (double v : parse_list(arg.substr(8))) idx.push_back(static_cast<Index>(v));
    return ModulationSpec::degrees_to_radians(p, idx);
  }
  throw DimensionError("--modulation must be identity, diag:a,b,... or deg2rad:i,j,...");
}

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<double> gap_tol, equivalence_tol, invariance_tol, rtol, atol;
  std::string modulation;
  std::string mee_path;
  std::string format = "all";
  bool save_dataset = false;
};

void print_report(const StudyReport& r) {
  std::printf("%-10s %4s %14s %14s %12s\n", "algorithm", "loop", "max_kappa", "min_kappa", "final_gap");
  for (const auto& rec : r.records)
    std::printf("%-10s %4zu %14.2f %14.2f %12.3e\n", rec.algorithm.c_str(), rec.loop + 1, rec.max_kappa(),
                rec.min_kappa(), rec.final_gap ? *rec.final_gap : std::nan(""));
  int failed = 0;
  for (const auto& c : r.checks)
    if (!c.ok) {
      ++failed;
      std::printf("FAILED %s: %.3e (threshold %.3e)\n", c.name.c_str(), c.value, c.threshold);
    }
  std::printf("%zu checks, %d failed\n", r.checks.size(), failed);
}

int run_study_command(const std::string& which, const RunOptions& o) {
  StudyConfig cfg;
  if (!o.config.empty()) {
    cfg = load_config(o.config);
  } else if (which == "lin2d") {
    cfg = lin2d_config();
  } else if (which == "synthetic2loop") {
    cfg = synthetic2loop_config();
  } else {
    throw DimensionError("run custom needs --config <path>");
  }
  if (which == "lin2d" && cfg.plant != PlantKind::Lin2d)
    throw DimensionError("config plant is not lin2d");
  if (which == "synthetic2loop" && cfg.plant != PlantKind::Synthetic2Loop)
    throw DimensionError("config plant is not synthetic2loop");

  if (o.gap_tol) cfg.tol.gap = *o.gap_tol;
  if (o.equivalence_tol) cfg.tol.equivalence = *o.equivalence_tol;
  if (o.invariance_tol) cfg.tol.invariance = *o.invariance_tol;
  if (o.rtol) cfg.ode.rel_tol = *o.rtol;
  if (o.atol) cfg.ode.abs_tol = *o.atol;
  if (!o.modulation.empty()) {
    if (o.modulation == "none") {
      cfg.modulation.reset();
      std::erase_if(cfg.variants, [](const std::string& v) { return v.ends_with("+MEE"); });
    } else {
      cfg.modulation = parse_modulation(o.modulation, build_plant(cfg).partition);
    }
  }
  if (o.mee_path == "simulated") cfg.mee_path = ModulationPath::Simulated;
  else if (o.mee_path == "algebraic") cfg.mee_path = ModulationPath::Algebraic;
  if (!o.out.empty()) cfg.output_dir = o.out;

  std::vector<TrajectoryDataset> datasets;
  const StudyReport rep = run_study(cfg, o.save_dataset ? &datasets : nullptr);
  print_report(rep);

  const ReportFormat fmt = o.format == "csv" ? ReportFormat::Csv
                           : o.format == "json" ? ReportFormat::Json
                                                : ReportFormat::All;
  for (const auto& path : emit_report(rep, cfg.output_dir, fmt)) std::printf("wrote %s\n", path.string().c_str());
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    const auto path = std::filesystem::path(cfg.output_dir) /
                      ("dataset_" + std::to_string(datasets[k].partition.loops()) + "loop.json");
    io::write_text(path, dataset_to_json(datasets[k]).dump(2) + "\n");
    std::printf("wrote %s\n", path.string().c_str());
  }
  return rep.all_ok() ? kExitOk : kExitChecksFailed;
}

int check_algebra_command(const AlgebraSuiteOptions& opts) {
  auto fixed = algebra_fixed_cases();
  const AlgebraSuiteResult res = run_algebra_suite(opts);
  bool ok = res.ok();
  std::printf("%-78s %6s %6s %11s %9s\n", "property", "pass", "fail", "worst", "tol");
  for (const auto& p : fixed) {
    ok = ok && p.failed == 0;
    std::printf("%-78s %6ld %6ld %11.3e %9.1e\n", p.name.c_str(), p.passed, p.failed, p.worst, p.tol);
  }
  for (const auto& p : res.properties)
    std::printf("%-78s %6ld %6ld %11.3e %9.1e\n", p.name.c_str(), p.passed, p.failed, p.worst, p.tol);
  std::printf("%d random cases, seed %llu: %s\n", res.cases, static_cast<unsigned long long>(opts.seed),
              ok ? "all properties hold" : "FAILURES");
  return ok ? kExitOk : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetric Kronecker algebra and data-driven LQR learning studies"};
  app.require_subcommand(1);

  AlgebraSuiteOptions alg;
  auto* check = app.add_subcommand("check-algebra", "Randomized property suite for the symmetric Kronecker algebra");
  check->add_option("--cases", alg.cases, "Number of random cases")->check(CLI::PositiveNumber);
  check->add_option("--seed", alg.seed, "RNG seed");
  check->add_option("--max-dim", alg.max_dim, "Largest matrix dimension drawn")->check(CLI::Range(2, 12));
  check->add_option("--tol-scale", alg.tol_scale, "Multiply every tolerance by this factor")
      ->check(CLI::PositiveNumber);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run a learning study");
  run->require_subcommand(1);
  const auto add_common = [&ro](CLI::App* sc) {
    sc->add_option("--out,-o", ro.out, "Output directory");
    sc->add_option("--gap-tol", ro.gap_tol, "Final-gain gap tolerance ||K - K*||_F");
    sc->add_option("--equivalence-tol", ro.equivalence_tol, "Tolerance on ||P_i - P_i^Kleinman||_F");
    sc->add_option("--invariance-tol", ro.invariance_tol, "Tolerance on modulated vs plain iterates");
    sc->add_option("--rtol", ro.rtol, "Integrator relative tolerance");
    sc->add_option("--atol", ro.atol, "Integrator absolute tolerance");
    sc->add_option("--modulation", ro.modulation, "identity | none | diag:a,b,... | deg2rad:i,j,...");
    sc->add_option("--mee-path", ro.mee_path, "Modulated data path")
        ->check(CLI::IsMember({"algebraic", "simulated"}));
    sc->add_option("--format", ro.format, "Report format")->check(CLI::IsMember({"csv", "json", "all"}));
    sc->add_flag("--save-dataset", ro.save_dataset, "Also write the simulated datasets as JSON");
  };
  auto* lin2d = run->add_subcommand("lin2d", "Two decoupled first-order loops, reference kappa study");
  lin2d->add_option("--config", ro.config, "Optional config overriding the defaults")->check(CLI::ExistingFile);
  add_common(lin2d);
  auto* syn = run->add_subcommand("synthetic2loop", "Nonlinear two-loop plant with a unit-scale mismatch");
  syn->add_option("--config", ro.config, "Optional config overriding the defaults")->check(CLI::ExistingFile);
  add_common(syn);
  auto* custom = run->add_subcommand("custom", "Study described by a JSON config");
  custom->add_option("--config", ro.config, "Config path")->required()->check(CLI::ExistingFile);
  add_common(custom);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return check_algebra_command(alg);
    for (auto* sc : {lin2d, syn, custom})
      if (*sc) return run_study_command(sc->get_name(), ro);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
