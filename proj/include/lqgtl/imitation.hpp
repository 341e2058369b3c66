#pragma once

#include "lqgtl/data_matrices.hpp"

namespace lqgtl {

struct LearnedGain {
  Matrix K;             // m x n(m+l)
  double residual = 0;  // |next_inputs - K windows| / max(1, |next_inputs|)
  bool unique = false;  // the window matrix had full row rank
};

// Minimum-norm static gain reproducing the recorded inputs from windows of
// depth n. Uniqueness needs T >= n(l+2) - 1 steps; shorter trajectories with
// at least one full window still yield a (non-unique) gain.
LearnedGain learn_klqg(const Trajectory& traj, Index n, const ToleranceConfig& tol = {},
                       double consistency_tol = 1e-6);

// Trajectory length (steps) at which the learned gain becomes unique.
inline long imitation_length(Index n, Index l) { return static_cast<long>(n * (l + 2) - 1); }

}  // namespace lqgtl
