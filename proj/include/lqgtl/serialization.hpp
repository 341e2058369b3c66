#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "lqgtl/transfer.hpp"

namespace lqgtl {

// Decimal text with 17 significant digits, which parses back to the same double.
std::string format_double(double value);

// CSV with header t,u_1..u_m,y_1..y_l and one row per sample.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& in);

struct TrajectoryEnvelope {
  Trajectory traj;
  std::uint64_t seed = 0;
  std::string task_label;
};

// {m, l, T, start_time, seed, task_label, data}; data holds one
// [t, u..., y...] row per sample.
nlohmann::json trajectory_to_json(const TrajectoryEnvelope& env);
TrajectoryEnvelope trajectory_from_json(const nlohmann::json& j);

// {n, m, l, method, L_hat, diagnostics}; the kernel basis is recomputed on load.
nlohmann::json estimator_to_json(const LearnedEstimator& est);
LearnedEstimator estimator_from_json(const nlohmann::json& j, const ToleranceConfig& tol = {});

}  // namespace lqgtl
