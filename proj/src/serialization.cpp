#include "lqgtl/serialization.hpp"

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace lqgtl {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw InvalidInput("cannot parse number '" + text + "'");
  return value;
}

// Reads "<prefix><k>" headers and returns the count, checking the order.
Index count_columns(const std::vector<std::string>& header, std::size_t& at, const std::string& prefix) {
  Index count = 0;
  while (at < header.size() && header[at] == prefix + std::to_string(count + 1)) {
    ++count;
    ++at;
  }
  return count;
}

nlohmann::json matrix_rows(const Matrix& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_rows(const nlohmann::json& rows, Index expected_cols) {
  Matrix M(static_cast<Index>(rows.size()), expected_cols);
  for (Index i = 0; i < M.rows(); ++i) {
    const auto& row = rows.at(i);
    if (static_cast<Index>(row.size()) != expected_cols)
      throw DimensionError("matrix row has the wrong length");
    for (Index j = 0; j < expected_cols; ++j) M(i, j) = row.at(j).get<double>();
  }
  return M;
}

double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  traj.validate();
  out << "t";
  for (Index k = 1; k <= traj.m(); ++k) out << ",u_" << k;
  for (Index k = 1; k <= traj.l(); ++k) out << ",y_" << k;
  out << "\n";
  for (Index s = 0; s < traj.samples(); ++s) {
    out << traj.start_time + s;
    for (Index k = 0; k < traj.m(); ++k) out << ',' << format_double(traj.inputs(k, s));
    for (Index k = 0; k < traj.l(); ++k) out << ',' << format_double(traj.outputs(k, s));
    out << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("trajectory csv: missing header");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "t") throw InvalidInput("trajectory csv: header must start with t");
  std::size_t at = 1;
  const Index m = count_columns(header, at, "u_");
  const Index l = count_columns(header, at, "y_");
  if (at != header.size() || m == 0 || l == 0) throw InvalidInput("trajectory csv: malformed header");

  std::vector<std::vector<double>> rows;
  long first_time = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw InvalidInput("trajectory csv: ragged row");
    const long t = std::stol(cells[0]);
    if (rows.empty()) first_time = t;
    if (t != first_time + static_cast<long>(rows.size()))
      throw InvalidInput("trajectory csv: time column is not consecutive");
    std::vector<double> values;
    for (std::size_t k = 1; k < cells.size(); ++k) values.push_back(parse_double(cells[k]));
    rows.push_back(std::move(values));
  }
  Trajectory traj;
  traj.start_time = first_time;
  traj.inputs.resize(m, static_cast<Index>(rows.size()));
  traj.outputs.resize(l, static_cast<Index>(rows.size()));
  for (Index s = 0; s < static_cast<Index>(rows.size()); ++s) {
    for (Index k = 0; k < m; ++k) traj.inputs(k, s) = rows[s][k];
    for (Index k = 0; k < l; ++k) traj.outputs(k, s) = rows[s][m + k];
  }
  traj.validate();
  return traj;
}

nlohmann::json trajectory_to_json(const TrajectoryEnvelope& env) {
  const Trajectory& traj = env.traj;
  traj.validate();
  nlohmann::json data = nlohmann::json::array();
  for (Index s = 0; s < traj.samples(); ++s) {
    nlohmann::json row = nlohmann::json::array();
    row.push_back(traj.start_time + s);
    for (Index k = 0; k < traj.m(); ++k) row.push_back(traj.inputs(k, s));
    for (Index k = 0; k < traj.l(); ++k) row.push_back(traj.outputs(k, s));
    data.push_back(row);
  }
  return {{"m", traj.m()},
          {"l", traj.l()},
          {"T", traj.length()},
          {"start_time", traj.start_time},
          {"seed", env.seed},
          {"task_label", env.task_label},
          {"data", data}};
}

TrajectoryEnvelope trajectory_from_json(const nlohmann::json& j) {
  TrajectoryEnvelope env;
  const Index m = j.at("m").get<Index>();
  const Index l = j.at("l").get<Index>();
  const long T = j.at("T").get<long>();
  env.seed = j.at("seed").get<std::uint64_t>();
  env.task_label = j.at("task_label").get<std::string>();
  env.traj.start_time = j.at("start_time").get<long>();
  const auto& data = j.at("data");
  if (static_cast<long>(data.size()) != T + 1) throw DimensionError("trajectory json: T disagrees with data");
  env.traj.inputs.resize(m, T + 1);
  env.traj.outputs.resize(l, T + 1);
  for (long s = 0; s <= T; ++s) {
    const auto& row = data.at(s);
    if (static_cast<Index>(row.size()) != 1 + m + l) throw DimensionError("trajectory json: bad row");
    for (Index k = 0; k < m; ++k) env.traj.inputs(k, s) = row.at(1 + k).get<double>();
    for (Index k = 0; k < l; ++k) env.traj.outputs(k, s) = row.at(1 + m + k).get<double>();
  }
  env.traj.validate();
  return env;
}

nlohmann::json estimator_to_json(const LearnedEstimator& est) {
  const auto& d = est.diagnostics;
  nlohmann::json j = {{"n", est.n},
          {"m", est.m},
          {"l", est.l},
          {"method", to_string(est.method)},
          {"L_hat", matrix_rows(est.L_hat)},
          {"diagnostics",
           {{"iterations", d.iterations},
            {"objective", d.objective},
            {"converged", d.converged},
            {"starts", d.starts},
            {"refined", d.refined},
            {"refine_starts", d.refine_starts},
            {"refine_evaluations", d.refine_evaluations},
            {"refine_objective", d.refine_objective},
            {"consistency", d.consistency}}}};
  if (est.structured_params.size() > 0)
    j["structured_params"] = std::vector<double>(est.structured_params.begin(), est.structured_params.end());
  return j;
}

LearnedEstimator estimator_from_json(const nlohmann::json& j, const ToleranceConfig& tol) {
  LearnedEstimator est;
  est.n = j.at("n").get<Index>();
  est.m = j.at("m").get<Index>();
  est.l = j.at("l").get<Index>();
  est.method = estimator_method_from_string(j.at("method").get<std::string>());
  est.L_hat = matrix_from_rows(j.at("L_hat"), est.n * (est.m + est.l));
  if (est.L_hat.rows() != est.n + est.m) throw DimensionError("estimator json: wrong row count");
  est.kernel_basis = nullspace_basis(est.L_hat, tol);
  if (j.contains("diagnostics")) {
    const auto& d = j.at("diagnostics");
    auto& out = est.diagnostics;
    out.iterations = d.value("iterations", 0L);
    out.objective = number_or(d, "objective", 0.0);
    out.converged = d.value("converged", true);
    out.starts = d.value("starts", 1L);
    out.refined = d.value("refined", false);
    out.refine_starts = d.value("refine_starts", 0L);
    out.refine_evaluations = d.value("refine_evaluations", 0L);
    // Non-finite objectives are written as null.
    out.refine_objective = number_or(d, "refine_objective", 0.0);
    out.consistency = number_or(d, "consistency", 0.0);
  }
  if (j.contains("structured_params")) {
    const auto values = j.at("structured_params").get<std::vector<double>>();
    est.structured_params = Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
  }
  return est;
}

}  // namespace lqgtl
