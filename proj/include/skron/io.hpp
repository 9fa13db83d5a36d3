#pragma once

// JSON and CSV persistence. Doubles in JSON are hex-float strings ("%a"),
// so every value round-trips bit-exactly.

#include <Eigen/Dense>
#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skron/eirl.hpp"

namespace skron {

using Json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double unhex(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw IoError("expected a hex-float string, got " + j.dump());
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw IoError("malformed floating-point value '" + s + "'");
  return v;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json to_json(const Eigen::MatrixXd& M) {
  Json data = Json::array();
  for (Index r = 0; r < M.rows(); ++r)
    for (Index c = 0; c < M.cols(); ++c) data.push_back(hex(M(r, c)));
  return Json{{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  const Index rows = j.at("rows").get<Index>(), cols = j.at("cols").get<Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw IoError("matrix: data length does not equal rows * cols");
  Eigen::MatrixXd M(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) M(r, c) = unhex(data[static_cast<std::size_t>(r * cols + c)]);
  return M;
}

inline Json to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(hex(v(i)));
  return a;
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = unhex(j[i]);
  return v;
}

inline Json doubles_to_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(hex(x));
  return a;
}

inline std::vector<double> doubles_from_json(const Json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(unhex(e));
  return v;
}

inline Json to_json(const ProbingSignal& d) {
  Json ch = Json::array();
  for (const auto& c : d.channels) {
    Json terms = Json::array();
    for (const auto& s : c)
      terms.push_back({{"amplitude", hex(s.amplitude)},
                       {"frequency", hex(s.frequency)},
                       {"phase", hex(s.phase)}});
    ch.push_back(std::move(terms));
  }
  return ch;
}

inline ProbingSignal probing_from_json(const Json& j) {
  ProbingSignal d;
  for (const auto& c : j) {
    std::vector<Sinusoid> terms;
    for (const auto& s : c)
      terms.push_back({unhex(s.at("amplitude")), unhex(s.at("frequency")),
                       s.contains("phase") ? unhex(s.at("phase")) : 0.0});
    d.channels.push_back(std::move(terms));
  }
  return d;
}

inline Json to_json(const LoopPartition& p) {
  return {{"state_dims", p.state_dims()}, {"input_dims", p.input_dims()}};
}

inline LoopPartition partition_from_json(const Json& j) {
  return LoopPartition(j.at("state_dims").get<std::vector<Index>>(),
                       j.at("input_dims").get<std::vector<Index>>());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  out << text;
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading: " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(origin + ": " + e.what());
  }
}

}  // namespace io

// ---- datasets ---------------------------------------------------------

inline Json dataset_to_json(const TrajectoryDataset& ds) {
  Json loops = Json::array();
  for (const auto& l : ds.loops)
    loops.push_back({{"times", io::doubles_to_json(l.times)},
                     {"states", io::to_json(l.states)},
                     {"acc_x_x", io::to_json(l.acc_xx)},
                     {"acc_x_gu", io::to_json(l.acc_xgu)},
                     {"acc_x_w", io::to_json(l.acc_xw)}});
  return {{"format", "skron-dataset-1"},
          {"partition", io::to_json(ds.partition)},
          {"K0", io::to_json(ds.K0)},
          {"probing", io::to_json(ds.probing)},
          {"x0", io::to_json(ds.x0)},
          {"loops", std::move(loops)}};
}

inline TrajectoryDataset dataset_from_json(const Json& j) {
  if (j.value("format", "") != "skron-dataset-1") throw IoError("dataset: unknown or missing format tag");
  TrajectoryDataset ds;
  ds.partition = io::partition_from_json(j.at("partition"));
  ds.K0 = io::matrix_from_json(j.at("K0"));
  ds.probing = io::probing_from_json(j.at("probing"));
  ds.x0 = io::vector_from_json(j.at("x0"));
  for (const auto& l : j.at("loops")) {
    LoopData ld;
    ld.times = io::doubles_from_json(l.at("times"));
    ld.states = io::matrix_from_json(l.at("states"));
    ld.acc_xx = io::matrix_from_json(l.at("acc_x_x"));
    ld.acc_xgu = io::matrix_from_json(l.at("acc_x_gu"));
    ld.acc_xw = io::matrix_from_json(l.at("acc_x_w"));
    ds.loops.push_back(std::move(ld));
  }
  if (ds.loops.size() != ds.partition.loops()) throw IoError("dataset: loop count disagrees with partition");
  return ds;
}

// ---- learning records -------------------------------------------------

inline Json record_to_json(const LearningRecord& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    Json js{{"iteration", s.iteration},
            {"P", io::to_json(s.P.matrix())},
            {"K", io::to_json(s.K)},
            {"K_next", io::to_json(s.K_next)},
            {"kappa", io::hex(s.kappa)},
            {"residual", io::hex(s.residual)}};
    js["gap"] = s.gap ? Json(io::hex(*s.gap)) : Json(nullptr);
    steps.push_back(std::move(js));
  }
  Json out{{"algorithm", r.algorithm},
           {"loop", r.loop + 1},
           {"steps", std::move(steps)},
           {"K_final", io::to_json(r.K_final)}};
  out["final_gap"] = r.final_gap ? Json(io::hex(*r.final_gap)) : Json(nullptr);
  return out;
}

inline LearningRecord record_from_json(const Json& j) {
  LearningRecord r;
  r.algorithm = j.at("algorithm").get<std::string>();
  const auto loop = j.at("loop").get<std::size_t>();
  if (loop < 1) throw IoError("record: loop numbers start at 1");
  r.loop = loop - 1;
  for (const auto& js : j.at("steps")) {
    LearningStep s;
    s.iteration = js.at("iteration").get<int>();
    s.P = SymMatrix(io::matrix_from_json(js.at("P")));
    s.K = io::matrix_from_json(js.at("K"));
    s.K_next = io::matrix_from_json(js.at("K_next"));
    s.kappa = io::unhex(js.at("kappa"));
    s.residual = io::unhex(js.at("residual"));
    if (!js.at("gap").is_null()) s.gap = io::unhex(js.at("gap"));
    r.steps.push_back(std::move(s));
  }
  r.K_final = io::matrix_from_json(j.at("K_final"));
  if (!j.at("final_gap").is_null()) r.final_gap = io::unhex(j.at("final_gap"));
  return r;
}

/// iteration,kappa,residual,gap ; gap is ||P_i - P_i^Kleinman||_F (empty when
/// no oracle was attached).
inline std::string record_to_csv(const LearningRecord& r) {
  if (r.steps.empty()) throw IoError("record_to_csv: record has no iterations");
  std::string out = "iteration,kappa,residual,gap\n";
  for (const auto& s : r.steps)
    out += std::to_string(s.iteration) + "," + io::full(s.kappa) + "," + io::full(s.residual) +
           "," + (s.gap ? io::full(*s.gap) : std::string()) + "\n";
  return out;
}

namespace detail {
inline bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}
}  // namespace detail

inline bool operator==(const LearningStep& a, const LearningStep& b) {
  return a.iteration == b.iteration && a.P == b.P && detail::same(a.K, b.K) &&
         detail::same(a.K_next, b.K_next) &&
         a.kappa == b.kappa && a.residual == b.residual && a.gap == b.gap;
}

inline bool operator==(const LearningRecord& a, const LearningRecord& b) {
  return a.algorithm == b.algorithm && a.loop == b.loop && a.steps == b.steps &&
         detail::same(a.K_final, b.K_final) && a.final_gap == b.final_gap;
}

}  // namespace skron
