#include "lqgtl/data_matrices.hpp"

#include <algorithm>

namespace lqgtl {

std::pair<Vector, Vector> stack_window(const Trajectory& traj, Index r, Index t) {
  traj.validate();
  if (r < 1 || t < 0) throw InvalidInput("stack_window: depth must be positive and start nonnegative");
  if (t + r >= traj.samples())
    throw InsufficientData("stack_window: window runs past the trajectory", static_cast<long>(t + r));
  const Index m = traj.m(), l = traj.l();
  Vector U(r * m), Y(r * l);
  for (Index k = 0; k < r; ++k) {
    U.segment(k * m, m) = traj.inputs.col(t + k);
    Y.segment(k * l, l) = traj.outputs.col(t + k + 1);
  }
  return {U, Y};
}

DataMatrixPair build_pair(const Trajectory& traj, Index r, Index c, Index t0) {
  traj.validate();
  if (r < 1 || c < 1 || t0 < 0) throw InvalidInput("build_pair: r and c must be positive");
  const long required = static_cast<long>(t0 + r + c - 1);
  if (traj.length() < required)
    throw InsufficientData("build_pair: trajectory too short for the requested windows", required);
  const Index m = traj.m(), l = traj.l();
  DataMatrixPair pair;
  pair.depth = r;
  pair.columns = c;
  pair.t0 = t0;
  pair.windows.resize(r * (m + l), c);
  pair.next_inputs.resize(m, c);
  for (Index j = 0; j < c; ++j) {
    const Index t = t0 + j;
    for (Index k = 0; k < r; ++k) {
      pair.windows.block(k * m, j, m, 1) = traj.inputs.col(t + k);
      pair.windows.block(r * m + k * l, j, l, 1) = traj.outputs.col(t + k + 1);
    }
    pair.next_inputs.col(j) = traj.inputs.col(t + r);
  }
  return pair;
}

Index expected_rank(Index r, Index c, Index n, Index m, Index l) {
  if (r < 1 || c < 1 || n < 1 || m < 1 || l < 1)
    throw InvalidInput("expected_rank: arguments must be positive");
  return std::min({(m + l) * r, c, n + l * r});
}

DimensionEstimate estimate_dimension(const Trajectory& traj, Index r_max, double rank_tol) {
  traj.validate();
  if (r_max < 1) throw InvalidInput("estimate_dimension: r_max must be positive");
  const Index m = traj.m(), l = traj.l();
  const ToleranceConfig tol{rank_tol, ToleranceConfig{}.residual_tol};
  for (Index r = 1; r <= r_max + 1; ++r) {
    const Index c = traj.length() - r + 1;
    const Index needed = (m + l) * (r + 1);
    if (c < needed)
      throw InsufficientData("estimate_dimension: not enough columns to test depth " +
                                 std::to_string(r),
                             static_cast<long>(needed + r - 1));
    const Index rank = numerical_rank(build_pair(traj, r, c).windows, tol);
    if (rank < (m + l) * r) {
      if (rank - l * r < 1)
        throw NumericalFailure("estimate_dimension: rank deficit inconsistent with any state size");
      return {rank - l * r, l, r};
    }
  }
  throw NumericalFailure("estimate_dimension: no rank saturation up to the maximum depth");
}

}  // namespace lqgtl
