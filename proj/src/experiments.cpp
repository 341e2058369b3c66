#include "lqgtl/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "lqgtl/serialization.hpp"

namespace lqgtl {

namespace {

constexpr double kNoThreshold = std::numeric_limits<double>::infinity();
// Subspace errors below this level are rounding noise when comparing the
// medians of successive source counts.
constexpr double kSweepNoiseFloor = 1e-8;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_error(const Matrix& estimate, const Matrix& reference) {
  return (estimate - reference).norm() / std::max(reference.norm(), std::numeric_limits<double>::min());
}

struct Recorder {
  std::string scenario;
  std::vector<ResultRecord> records;

  void at_most(std::uint64_t seed, const std::string& metric, double value, double threshold,
               double wall) {
    records.push_back({scenario, seed, metric, value, threshold, value <= threshold, wall});
  }
  void at_least(std::uint64_t seed, const std::string& metric, double value, double threshold,
                double wall) {
    records.push_back({scenario, seed, metric, value, threshold, value >= threshold, wall});
  }
  void info(std::uint64_t seed, const std::string& metric, double value, double wall) {
    records.push_back({scenario, seed, metric, value, kNoThreshold, true, wall});
  }
};

std::string padded(const char* prefix, long value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%s%02ld", prefix, value);
  return buffer;
}

int repetitions(const ExperimentConfig& cfg, int fallback) {
  return cfg.repetitions > 0 ? cfg.repetitions : fallback;
}

std::vector<Trajectory> source_trajectories(const LinearSystem& sys,
                                            const std::vector<LqgTask>& tasks, long T,
                                            std::uint64_t seed) {
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    out.push_back(simulate_closed_loop(sys, build_compensator(sys, tasks[i]), T,
                                       derive_seed(seed, 3, i)));
  return out;
}

Matrix diagonal_weights(NormalGenerator& rng, Index size, double low, double high) {
  Vector d(size);
  for (Index k = 0; k < size; ++k) d(k) = low + (high - low) * rng.uniform();
  return d.asDiagonal();
}

Index uniform_index(NormalGenerator& rng, Index low, Index high) {
  return low + std::min<Index>(static_cast<Index>(rng.uniform() * (high - low + 1)), high - low);
}

Matrix closed_loop_matrix(const LinearSystem& sys, const Compensator& comp) {
  const Index n = sys.n(), k = comp.n();
  Matrix M(n + k, n + k);
  M << sys.A, sys.B * comp.H, comp.G * sys.C * sys.A,
      comp.E + comp.F * comp.H + comp.G * sys.C * sys.B * comp.H;
  return M;
}

// Stable compensator with filter and feedback gains perturbed away from the
// optimal ones.
Compensator perturbed_compensator(const LinearSystem& sys, const LqgTask& task,
                                  NormalGenerator& rng, const ToleranceConfig& tol) {
  const Matrix filter = kalman_gain(sys);
  const Matrix feedback = lqr_gain(sys, task);
  for (int attempt = 0; attempt < 20; ++attempt) {
    const double scale = 0.3;
    Matrix f = filter + scale * filter.norm() / std::sqrt(double(filter.size())) *
                            rng.vector(filter.size()).reshaped(filter.rows(), filter.cols());
    Matrix h = feedback + scale * feedback.norm() / std::sqrt(double(feedback.size())) *
                              rng.vector(feedback.size()).reshaped(feedback.rows(), feedback.cols());
    Compensator comp = compensator_from_gains(sys, f, h);
    if (spectral_radius(closed_loop_matrix(sys, comp)) < 0.98 && check_assumption1(comp, tol))
      return comp;
  }
  return build_compensator(sys, task);
}

// Rank law on a grid of window depths and column counts; returns the
// fraction of grid points whose numerical rank matches the prediction.
double rank_law_agreement(const Trajectory& traj, Index n, const ToleranceConfig& tol) {
  const Index m = traj.m(), l = traj.l();
  int total = 0, hits = 0;
  for (Index r = 1; r <= n + 1; ++r) {
    const Index full = (m + l) * r;
    for (Index c : {std::max<Index>(1, full - 2), n + l * r, full + 3}) {
      if (traj.length() < r + c - 1) continue;
      const DataMatrixPair pair = build_pair(traj, r, c);
      ++total;
      if (numerical_rank(pair.windows, tol) == expected_rank(r, c, n, m, l)) ++hits;
    }
  }
  return total == 0 ? 0.0 : double(hits) / total;
}

std::vector<ResultRecord> rank_law_sweep(const ExperimentConfig& cfg, Recorder& rec) {
  const int draws = repetitions(cfg, 200);
  const auto start = Clock::now();
  int passed = 0;
  for (int k = 0; k < draws; ++k) {
    const auto t0 = Clock::now();
    NormalGenerator rng(derive_seed(cfg.seed, 10, k));
    const EnsembleDraw draw = random_lqg_problem(rng, {}, cfg.tolerances);
    // Every other draw uses a non-optimal compensator.
    const Compensator comp = k % 2 == 0 ? build_compensator(draw.sys, draw.task)
                                        : perturbed_compensator(draw.sys, draw.task, rng, cfg.tolerances);
    SimulationOptions sim;
    sim.burn_in = 20;
    const Trajectory traj = simulate_closed_loop(draw.sys, comp, 120, derive_seed(cfg.seed, 11, k), sim);
    const double agreement = rank_law_agreement(traj, draw.sys.n(), cfg.tolerances);
    if (agreement == 1.0) ++passed;
    rec.info(cfg.seed, padded("rank_law_agreement/draw=", k), agreement, seconds_since(t0));
  }
  rec.at_least(cfg.seed, "rank_law_pass_rate", double(passed) / draws, 0.95, seconds_since(start));
  return rec.records;
}

std::vector<ResultRecord> dimension_sweep(const ExperimentConfig& cfg, Recorder& rec) {
  const int runs = repetitions(cfg, 100);
  const auto start = Clock::now();
  const LinearSystem sys = reactor_system(false);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  const long T = std::max<long>(cfg.t_source, 60);
  int hits = 0;
  for (int k = 0; k < runs; ++k) {
    const Trajectory traj = simulate_closed_loop(sys, comp, T, derive_seed(cfg.seed, 20, k));
    if (estimate_dimension(traj, 8).n == sys.n()) ++hits;
  }
  rec.at_least(cfg.seed, "dimension_recovery_rate", double(hits) / runs, 0.95, seconds_since(start));
  return rec.records;
}

std::vector<ResultRecord> ensemble_sweep(const ExperimentConfig& cfg, Recorder& rec) {
  const int draws = repetitions(cfg, 100);
  const auto start = Clock::now();
  const ToleranceConfig& tol = cfg.tolerances;
  double separation_max[2] = {0, 0};
  double row_max = 0;
  int rank_ok = 0, transfer_total = 0, transfer_ok = 0;
  double ratio_sum = 0;
  int ratio_count = 0;
  for (int k = 0; k < draws; ++k) {
    NormalGenerator rng(derive_seed(cfg.seed, 30, k));
    const EnsembleDraw draw = random_lqg_problem(rng, {}, tol);
    const LinearSystem& sys = draw.sys;
    const Index n = sys.n(), m = sys.m(), l = sys.l();
    const Compensator comp = build_compensator(sys, draw.task);
    const Matrix model = static_lqg_gain(comp, n, tol);
    const SeparationDecomposition dec = separation_decomposition(comp, n, tol);
    const double err = relative_error(dec.control * dec.estimation, model);
    separation_max[m - 1] = std::max(separation_max[m - 1], err);
    if (numerical_rank(dec.estimation, tol) == n + m) ++rank_ok;
    if (m == 2) {
      for (Index i = 0; i < m; ++i)
        row_max = std::max(row_max, relative_error(static_gain_row(comp, n, i, tol), model.row(i)));
    } else {
      // Single-input transfer on the drawn system with random source tasks.
      ++transfer_total;
      const int sources = static_cast<int>(n * (m + l));
      std::vector<SourceDataset> data;
      for (int i = 0; i < sources; ++i) {
        LqgTask task{diagonal_weights(rng, n, 0.5, 5.0), diagonal_weights(rng, m, 0.5, 3.0), ""};
        data.push_back({simulate_closed_loop(sys, build_compensator(sys, task), imitation_length(n, l),
                                             derive_seed(cfg.seed, 31, k * 64 + i)),
                        "source", std::nullopt});
      }
      try {
        const LearnedEstimator est = learn_lest_single_input(data, n, tol);
        const Trajectory target =
            simulate_closed_loop(sys, comp, transfer_length(n, m), derive_seed(cfg.seed, 32, k));
        const TargetResult res = learn_target_gain(est, target, n, tol);
        if (relative_error(res.K_target, model) <= 1e-6) ++transfer_ok;
      } catch (const Error&) {
      }
      if (l == 2) {
        ratio_sum += double(transfer_length(n, m)) / imitation_length(n, l);
        ++ratio_count;
      }
    }
  }
  const double wall = seconds_since(start);
  rec.at_most(cfg.seed, "separation_max_rel_error/m=1", separation_max[0], 1e-8, wall);
  rec.at_most(cfg.seed, "separation_max_rel_error/m=2", separation_max[1], 1e-8, wall);
  rec.at_least(cfg.seed, "estimation_rank_rate", double(rank_ok) / draws, 1.0, wall);
  rec.at_most(cfg.seed, "row_gain_max_rel_error/m=2", row_max, 1e-8, wall);
  if (transfer_total > 0)
    rec.at_least(cfg.seed, "single_input_transfer_rate", double(transfer_ok) / transfer_total, 0.95, wall);
  if (ratio_count > 0)
    rec.info(cfg.seed, "target_to_imitation_length/l=2", ratio_sum / ratio_count, wall);
  return rec.records;
}

std::vector<ResultRecord> cost_sweep(const ExperimentConfig& cfg, Recorder& rec) {
  const int runs = repetitions(cfg, 50);
  const auto start = Clock::now();
  const LinearSystem sys = reactor_system(false);
  const LqgTask task = reactor_target_task(false);
  const Compensator comp = build_compensator(sys, task);
  const Index n = sys.n();

  // Static controller imitated from one expert trajectory.
  const Trajectory expert = simulate_closed_loop(sys, comp, std::max(cfg.t_source, imitation_length(n, sys.l())),
                                                 derive_seed(cfg.seed, 1));
  const Matrix K = learn_klqg(expert, n, cfg.tolerances).K;

  // The window controller applies zero inputs until its first full window,
  // so the average cost is taken after a common start-up period.
  const long T = 2000, settle = 200;
  double dynamic = 0, fixed = 0;
  for (int k = 0; k < runs; ++k) {
    const std::uint64_t s = derive_seed(cfg.seed, 40, k);
    dynamic += quadratic_cost(simulate_closed_loop_with_states(sys, comp, settle + T, s), task, T, settle);
    fixed += quadratic_cost(simulate_window_feedback(sys, K, n, settle + T, s), task, T, settle);
  }
  dynamic /= runs;
  fixed /= runs;
  const double wall = seconds_since(start);
  rec.info(cfg.seed, "cost_dynamic", dynamic, wall);
  rec.info(cfg.seed, "cost_static", fixed, wall);
  rec.at_most(cfg.seed, "cost_relative_gap", std::abs(fixed - dynamic) / dynamic, 0.02, wall);
  return rec.records;
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::ReactorSingle: return "reactor-single";
    case Scenario::ReactorMulti: return "reactor-multi";
    case Scenario::RankLaw: return "rank-law";
    case Scenario::Dimension: return "dimension";
    case Scenario::EnsembleTransfer: return "ensemble-transfer";
    case Scenario::CostClosedLoop: return "cost-closedloop";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& tag) {
  for (Scenario s : {Scenario::ReactorSingle, Scenario::ReactorMulti, Scenario::RankLaw,
                     Scenario::Dimension, Scenario::EnsembleTransfer, Scenario::CostClosedLoop})
    if (to_string(s) == tag) return s;
  throw InvalidInput("unknown scenario '" + tag + "'");
}

ExperimentConfig default_config(Scenario scenario) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  if (scenario == Scenario::ReactorMulti) {
    cfg.n_sources = 10;
    cfg.repetitions = 10;
  }
  if (scenario == Scenario::Dimension) cfg.t_source = 60;
  // The published source weights Q_i = i I give nearly collinear source
  // gains (relative singular value near 6e-10), below the default cutoff.
  if (scenario == Scenario::ReactorSingle) cfg.tolerances.rank_tol = 1e-12;
  return cfg;
}

LinearSystem reactor_system(bool two_inputs) {
  LinearSystem sys;
  sys.A.resize(4, 4);
  sys.A << 1.178, 0.001, 0.511, -0.403,
      -0.051, 0.661, -0.011, 0.061,
      0.076, 0.335, 0.560, 0.382,
      0, 0.335, 0.089, 0.849;
  Matrix B(4, 2);
  B << 0.004, -0.087,
      0.467, 0.001,
      0.213, -0.235,
      0.213, -0.016;
  sys.B = two_inputs ? B : Matrix(B.leftCols(1));
  sys.C.resize(1, 4);
  sys.C << -0.44, -0.51, 0.09, 0.44;
  sys.W = 1.5 * Matrix::Identity(4, 4);
  sys.V = 0.6 * Matrix::Identity(1, 1);
  return sys;
}

LqgTask reactor_target_task(bool two_inputs) {
  LqgTask task;
  task.Q.resize(4, 4);
  task.Q << 6, 1, 1, -3,
      1, 1, 0, -1,
      1, 0, 3, 0,
      -3, -1, 0, 2;
  task.R = two_inputs ? Matrix(Eigen::Vector2d(1, 4).asDiagonal()) : Matrix::Identity(1, 1);
  task.label = "target";
  return task;
}

std::vector<LqgTask> reactor_single_sources(int count) {
  std::vector<LqgTask> tasks;
  for (int i = 1; i <= count; ++i)
    tasks.push_back({double(i) * Matrix::Identity(4, 4), Matrix::Identity(1, 1), "source-" + std::to_string(i)});
  return tasks;
}

std::vector<LqgTask> reactor_multi_sources(int count, std::uint64_t seed) {
  std::vector<LqgTask> tasks;
  for (int i = 0; i < count; ++i) {
    NormalGenerator rng(derive_seed(seed, 0, i));
    LqgTask task;
    task.Q = diagonal_weights(rng, 4, 0.5, 5.0);
    task.R = diagonal_weights(rng, 2, 0.5, 3.0);
    task.label = "source-" + std::to_string(i + 1);
    tasks.push_back(task);
  }
  return tasks;
}

Vector reactor_printed_gain() {
  Vector g(8);
  g << -0.01, 0.16, -0.54, 1.02, 2.6, -13.34, 21.25, -10.60;
  return g;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ stream) ^ index);
}

EnsembleDraw random_lqg_problem(NormalGenerator& rng, const EnsembleOptions& opts,
                                const ToleranceConfig& tol) {
  for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
    const Index n = uniform_index(rng, opts.n_min, opts.n_max);
    const Index m = uniform_index(rng, opts.m_min, opts.m_max);
    const Index l = uniform_index(rng, opts.l_min, opts.l_max);
    EnsembleDraw draw;
    draw.redraws = attempt;
    LinearSystem& sys = draw.sys;
    sys.A = rng.vector(n * n).reshaped(n, n);
    const double radius = spectral_radius(sys.A);
    if (radius > 1.2) sys.A *= 1.2 / radius;
    sys.B = rng.vector(n * m).reshaped(n, m);
    sys.C = rng.vector(l * n).reshaped(l, n);
    sys.W = (0.1 + 1.9 * rng.uniform()) * Matrix::Identity(n, n);
    sys.V = (0.1 + 1.9 * rng.uniform()) * Matrix::Identity(l, l);
    draw.task = {diagonal_weights(rng, n, 0.5, 5.0), diagonal_weights(rng, m, 0.5, 3.0), "random"};
    if (!check_controllable(sys.A, sys.B, tol) || !check_observable(sys.A, sys.C, tol)) continue;
    try {
      if (!check_assumption1(build_compensator(sys, draw.task), tol)) continue;
    } catch (const NumericalFailure&) {
      continue;
    }
    return draw;
  }
  throw NumericalFailure("random_lqg_problem: no admissible draw", opts.max_redraws);
}

std::vector<ResultRecord> run_reactor_single(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::ReactorSingle) throw InvalidInput("run_reactor_single: wrong scenario");
  Recorder rec{to_string(cfg.scenario), {}};
  const LinearSystem sys = reactor_system(false);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  const Index n = sys.n();
  const ToleranceConfig& tol = cfg.tolerances;
  const int seeds = repetitions(cfg, 1);

  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    auto t0 = Clock::now();
    const Matrix model = static_lqg_gain(comp, n, tol);
    rec.at_most(seed, "printed_gain_max_abs_diff",
                (model.row(0).transpose() - reactor_printed_gain()).cwiseAbs().maxCoeff(), 0.01,
                seconds_since(t0));

    t0 = Clock::now();
    const Trajectory expert = simulate_closed_loop(sys, comp, cfg.t_source, derive_seed(seed, 1));
    const LearnedGain imitation = learn_klqg(expert, n, tol);
    const double wall = seconds_since(t0);
    rec.at_most(seed, "imitation_gain_rel_error", relative_error(imitation.K, model), 1e-6, wall);
    rec.at_least(seed, "imitation_unique", imitation.unique ? 1.0 : 0.0, 1.0, wall);

    t0 = Clock::now();
    std::vector<SourceDataset> data;
    for (const auto& traj : source_trajectories(sys, reactor_single_sources(cfg.n_sources), cfg.t_source, seed))
      data.push_back({traj, "source", std::nullopt});
    const LearnedEstimator est = learn_lest_single_input(data, n, tol);
    const Index kernel_expected = n * (sys.m() + sys.l()) - (n + sys.m());
    const double kernel_dim = double(est.kernel_basis.cols());
    rec.records.push_back({rec.scenario, seed, "kernel_dimension", kernel_dim, double(kernel_expected),
                           kernel_dim == double(kernel_expected), seconds_since(t0)});

    t0 = Clock::now();
    const Trajectory target = simulate_closed_loop(sys, comp, cfg.t_target, derive_seed(seed, 5));
    const TargetResult res = learn_target_gain(est, target, n, tol);
    const double transfer_wall = seconds_since(t0);
    rec.at_most(seed, "transfer_gain_rel_error", relative_error(res.K_target, model), 1e-6, transfer_wall);
    rec.at_most(seed, "subspace_error", subspace_error(model, est), 1e-6, transfer_wall);

    t0 = Clock::now();
    bool rejected = false;
    Trajectory shorter = target;
    shorter.inputs = target.inputs.leftCols(target.samples() - 1);
    shorter.outputs = target.outputs.leftCols(target.samples() - 1);
    try {
      learn_target_gain(est, shorter, n, tol);
    } catch (const InsufficientData&) {
      rejected = true;
    }
    rec.at_least(seed, "short_target_rejected", rejected ? 1.0 : 0.0, 1.0, seconds_since(t0));
  }
  return rec.records;
}

std::vector<ResultRecord> run_reactor_multi(const ExperimentConfig& cfg) {
  if (cfg.scenario != Scenario::ReactorMulti) throw InvalidInput("run_reactor_multi: wrong scenario");
  if (cfg.n_sources < 2) throw InvalidInput("run_reactor_multi: need at least two sources");
  Recorder rec{to_string(cfg.scenario), {}};
  const LinearSystem sys = reactor_system(true);
  const Index n = sys.n(), m = sys.m();
  const SeparationDecomposition dec =
      separation_decomposition(build_compensator(sys, reactor_target_task(true)), n, cfg.tolerances);
  // For m > 1 the learnable target gain is the separation form.
  const Matrix K_target = dec.control * dec.estimation;
  const int seeds = repetitions(cfg, 10);
  const EstimatorMethod methods[2] = {EstimatorMethod::MultiKernelCorrection, EstimatorMethod::BilinearAls};
  const int counts = cfg.n_sources - 1;  // N = 2 .. n_sources
  std::vector<std::vector<double>> errors[2];
  for (auto& e : errors) e.assign(counts, {});

  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    auto t0 = Clock::now();
    const auto trajs = source_trajectories(sys, reactor_multi_sources(cfg.n_sources, derive_seed(seed, 2)),
                                           cfg.t_source, seed);
    int unique = 0;
    std::vector<SourceWindows> windows;
    for (const auto& traj : trajs) {
      if (learn_klqg(traj, n, cfg.tolerances).unique) ++unique;
      windows.push_back(source_windows(traj, n));
    }
    rec.at_most(seed, "source_gains_unique", unique, 0, seconds_since(t0));

    for (int mi = 0; mi < 2; ++mi) {
      Vector warm;
      for (int N = 2; N <= cfg.n_sources; ++N) {
        t0 = Clock::now();
        const std::vector<SourceWindows> subset(windows.begin(), windows.begin() + N);
        MultiInputOptions opts;
        opts.seed = derive_seed(seed, 4, N);
        opts.max_iter = 500;
        opts.starts = 2;
        opts.rank = cfg.tolerances;
        // Sources are nested in N, so the fit for N - 1 sources is a start.
        opts.warm_start = warm;
        const LearnedEstimator est = mi == 0 ? learn_lest_multi_kernel(subset, n, m, opts)
                                             : learn_lest_multi_bilinear(subset, n, m, opts);
        if (est.structured_params.size() > 0) warm = est.structured_params;
        const double err = subspace_error(K_target, est);
        errors[mi][N - 2].push_back(err);
        const std::string tag = to_string(methods[mi]) + padded("/N=", N);
        const double wall = seconds_since(t0);
        rec.info(seed, "subspace_error/" + tag, err, wall);
        rec.info(seed, "primary_converged/" + tag, est.diagnostics.converged ? 1.0 : 0.0, wall);
      }
    }
  }

  double best_final = kNoThreshold;
  const int allowed = static_cast<int>(std::floor(0.1 * (counts - 1)));
  for (int mi = 0; mi < 2; ++mi) {
    std::vector<double> medians;
    for (auto& e : errors[mi]) {
      std::sort(e.begin(), e.end());
      const std::size_t h = e.size() / 2;
      medians.push_back(e.size() % 2 ? e[h] : 0.5 * (e[h - 1] + e[h]));
    }
    const std::string name = to_string(methods[mi]);
    for (int i = 0; i < counts; ++i)
      rec.info(cfg.seed, "median_subspace_error/" + name + padded("/N=", i + 2), medians[i], 0);
    rec.at_most(cfg.seed, "median_increases/" + name, count_increases(medians, kSweepNoiseFloor), allowed, 0);
    best_final = std::min(best_final, medians.back());
  }
  rec.at_most(cfg.seed, "final_median_error_best", best_final, 1e-3, 0);
  return rec.records;
}

std::vector<ResultRecord> run_property_sweeps(const ExperimentConfig& cfg) {
  Recorder rec{to_string(cfg.scenario), {}};
  switch (cfg.scenario) {
    case Scenario::RankLaw: return rank_law_sweep(cfg, rec);
    case Scenario::Dimension: return dimension_sweep(cfg, rec);
    case Scenario::EnsembleTransfer: return ensemble_sweep(cfg, rec);
    case Scenario::CostClosedLoop: return cost_sweep(cfg, rec);
    default: throw InvalidInput("run_property_sweeps: not a property scenario");
  }
}

std::vector<ResultRecord> run_scenario(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::ReactorSingle: return run_reactor_single(cfg);
    case Scenario::ReactorMulti: return run_reactor_multi(cfg);
    default: return run_property_sweeps(cfg);
  }
}

int count_increases(const std::vector<double>& values, double noise_floor) {
  int count = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[i - 1] + noise_floor) ++count;
  return count;
}

std::vector<ResultRecord> ordered(std::vector<ResultRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const ResultRecord& a, const ResultRecord& b) {
    return a.seed != b.seed ? a.seed < b.seed : a.metric < b.metric;
  });
  return records;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
  out << "scenario,seed,metric,value,threshold,pass\n";
  for (const auto& r : records)
    out << r.scenario << ',' << r.seed << ',' << r.metric << ',' << format_double(r.value) << ','
        << format_double(r.threshold) << ',' << (r.pass ? "true" : "false") << "\n";
}

std::string results_summary_json(const std::vector<ResultRecord>& records) {
  nlohmann::json list = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j = {{"scenario", r.scenario}, {"seed", r.seed}, {"metric", r.metric},
                        {"value", r.value},       {"pass", r.pass}, {"wall_time", r.wall_time}};
    if (std::isfinite(r.threshold)) j["threshold"] = r.threshold;
    list.push_back(j);
    if (!r.pass) failures.push_back(r.scenario + ":" + r.metric);
  }
  const nlohmann::json summary = {{"records", records.size()},
                                  {"failed", failures.size()},
                                  {"passed", failures.empty()},
                                  {"failures", failures},
                                  {"results", list}};
  return summary.dump(2);
}

}  // namespace lqgtl
