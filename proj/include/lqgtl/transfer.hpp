#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lqgtl/imitation.hpp"

namespace lqgtl {

struct SourceDataset {
  Trajectory traj;
  std::string label;
  std::optional<LearnedGain> learned_gain;  // filled lazily by the learners
};

// Window data of one source task in the form the learners consume:
// next_inputs = gain * windows holds for every gain consistent with the task.
struct SourceWindows {
  Matrix windows;      // n(m+l) x c
  Matrix next_inputs;  // m x c
};

enum class EstimatorMethod { SingleInputKernel, MultiKernelCorrection, BilinearAls };

std::string to_string(EstimatorMethod method);
EstimatorMethod estimator_method_from_string(const std::string& tag);

struct EstimatorDiagnostics {
  long iterations = 0;            // iterations of the primary algorithm (best start)
  double objective = 0;           // final objective of the primary algorithm
  bool converged = true;
  long starts = 1;                // random starts used by the primary algorithm
  bool refined = false;           // structured refinement replaced the primary estimate
  long refine_starts = 0;
  long refine_evaluations = 0;
  double refine_objective = 0;
  double consistency = 0;         // sum of squared gain misfits on the source data spaces
};

struct LearnedEstimator {
  Index n = 0, m = 0, l = 0;
  Matrix L_hat;         // (n+m) x n(m+l), orthonormal rows
  Matrix kernel_basis;  // n(m+l) x (n(m+l) - (n+m)), orthonormal columns
  EstimatorMethod method = EstimatorMethod::SingleInputKernel;
  EstimatorDiagnostics diagnostics;
  // Companion-form filter parameters of the structured refinement; empty
  // unless the refinement produced L_hat.
  Vector structured_params;
};

struct TargetResult {
  Matrix K_hat;     // m x (n+m)
  Matrix K_target;  // m x n(m+l), equal to K_hat * L_hat
  double residual = 0;
  long trajectory_length_used = 0;
};

// Shortest target trajectory (steps) from which the control part can be learned.
inline long transfer_length(Index n, Index m) { return static_cast<long>(2 * n + m - 1); }

SourceWindows source_windows(const Trajectory& traj, Index n);

// Intersection of the kernels of the source gains; needs m = 1.
LearnedEstimator learn_lest_single_input(std::vector<SourceDataset>& datasets, Index n,
                                         const ToleranceConfig& tol = {});

bool check_assumption2(const std::vector<Matrix>& gains, const ToleranceConfig& tol = {});

// Trivial intersection of Ker(L) with the column span of the target windows.
bool check_persistency(const Matrix& L, const Matrix& windows, const ToleranceConfig& tol = {});

TargetResult learn_target_gain(const LearnedEstimator& est, const Trajectory& target, Index n,
                               const ToleranceConfig& tol = {});

struct MultiInputOptions {
  double tol = 1e-12;   // stopping tolerance of the primary algorithm
  long max_iter = 5000;
  std::uint64_t seed = 0;
  int starts = 5;       // random starts of the bilinear method
  // Structured refinement: fits the estimation matrix generated by a common
  // filter (companion state matrix) when the primary algorithm stalls.
  bool refine = true;
  int refine_starts = 200;
  long refine_max_evaluations = 4000;
  double refine_accept = 1e-18;  // relative objective that ends the search early
  // Structured parameters tried before the random starts, typically those of
  // an estimate learned from a subset of the same sources.
  Vector warm_start;
  ToleranceConfig rank{};
};

LearnedEstimator learn_lest_multi_kernel(const std::vector<SourceWindows>& sources, Index n,
                                         Index m, const MultiInputOptions& opts = {});
LearnedEstimator learn_lest_multi_bilinear(const std::vector<SourceWindows>& sources, Index n,
                                           Index m, const MultiInputOptions& opts = {});

// Convenience overloads building the windows from trajectories of depth n.
LearnedEstimator learn_lest_multi_kernel(const std::vector<SourceDataset>& datasets, Index n,
                                         Index m, const MultiInputOptions& opts = {});
LearnedEstimator learn_lest_multi_bilinear(const std::vector<SourceDataset>& datasets, Index n,
                                           Index m, const MultiInputOptions& opts = {});

// Spectral norm of the part of K_target outside the row space of L_hat.
double subspace_error(const Matrix& K_target, const Matrix& L_hat);
double subspace_error(const Matrix& K_target, const LearnedEstimator& est);

}  // namespace lqgtl
