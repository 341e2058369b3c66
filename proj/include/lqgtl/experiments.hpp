#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lqgtl/lqg.hpp"
#include "lqgtl/transfer.hpp"

namespace lqgtl {

enum class Scenario { ReactorSingle, ReactorMulti, RankLaw, Dimension, EnsembleTransfer, CostClosedLoop };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& tag);

// Trajectory lengths count steps (a trajectory of length T has T + 1 samples).
struct ExperimentConfig {
  Scenario scenario = Scenario::ReactorSingle;
  std::uint64_t seed = 0;
  int n_sources = 5;
  long t_source = 11;
  long t_target = 8;
  ToleranceConfig tolerances{};
  std::string output_path;
  // Number of seeds (reactor scenarios) or random draws (property sweeps);
  // 0 selects the scenario default.
  int repetitions = 0;
};

// Defaults of the published batch-reactor experiments for a scenario.
ExperimentConfig default_config(Scenario scenario);

struct ResultRecord {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0;
  double threshold = 0;
  bool pass = false;
  double wall_time = 0;  // seconds
};

// Open-loop unstable batch reactor with four states and one output. The
// two-input variant keeps both columns of the input matrix.
LinearSystem reactor_system(bool two_inputs);
LqgTask reactor_target_task(bool two_inputs);
// Source tasks Q_i = i I, R = 1 for the single-input reactor.
std::vector<LqgTask> reactor_single_sources(int count);
// Source tasks with diagonal weights Q ~ U[0.5, 5], R ~ U[0.5, 3] per entry;
// the first k tasks do not depend on count.
std::vector<LqgTask> reactor_multi_sources(int count, std::uint64_t seed);
// Gain row printed for the single-input target task, to two decimals.
Vector reactor_printed_gain();

// Seeds derived from a base seed and a stream index (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

struct EnsembleOptions {
  Index n_min = 2, n_max = 6;
  Index m_min = 1, m_max = 2;
  Index l_min = 1, l_max = 2;
  int max_redraws = 20;
};

struct EnsembleDraw {
  LinearSystem sys;
  LqgTask task;
  int redraws = 0;
};

// Random system with standard normal B, C, A scaled to spectral radius at
// most 1.2, W = wI and V = vI with w, v ~ U[0.1, 2], and a random diagonal
// task. Draws failing the controllability, observability or compensator
// assumption checks are repeated; NumericalFailure after max_redraws.
EnsembleDraw random_lqg_problem(NormalGenerator& rng, const EnsembleOptions& opts = {},
                                const ToleranceConfig& tol = {});

std::vector<ResultRecord> run_reactor_single(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_reactor_multi(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_property_sweeps(const ExperimentConfig& cfg);
// Dispatches on cfg.scenario.
std::vector<ResultRecord> run_scenario(const ExperimentConfig& cfg);

// Number of increases of a sequence larger than `noise_floor`.
int count_increases(const std::vector<double>& values, double noise_floor);

// Records of one scenario sorted by (seed, metric) for output.
std::vector<ResultRecord> ordered(std::vector<ResultRecord> records);
void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& records);
std::string results_summary_json(const std::vector<ResultRecord>& records);

}  // namespace lqgtl
