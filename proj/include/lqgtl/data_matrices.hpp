#pragma once

#include <utility>

#include "lqgtl/lti.hpp"

namespace lqgtl {

// Column j of `windows` is [u(t0+j); ...; u(t0+j+r-1); y(t0+j+1); ...; y(t0+j+r)]
// and column j of `next_inputs` is u(t0+j+r). Indices count samples from the
// start of the trajectory.
struct DataMatrixPair {
  Matrix windows;      // r(m+l) x c
  Matrix next_inputs;  // m x c
  Index depth = 0;
  Index columns = 0;
  Index t0 = 0;
};

// (U, Y) window of depth r starting at sample t.
std::pair<Vector, Vector> stack_window(const Trajectory& traj, Index r, Index t);

// Throws InsufficientData unless the trajectory has at least t0 + r + c - 1
// steps, i.e. t0 + r + c samples.
DataMatrixPair build_pair(const Trajectory& traj, Index r, Index c, Index t0 = 0);

// Rank of the window matrix predicted for closed-loop data of an order-n plant.
Index expected_rank(Index r, Index c, Index n, Index m, Index l);

struct DimensionEstimate {
  Index n = 0;
  Index l = 0;
  Index depth = 0;  // window depth at which the rank first saturated
};

// Smallest depth r whose window matrix loses rank, using every available
// column. Requires at least (m+l)(r+1) columns at each depth tried.
DimensionEstimate estimate_dimension(const Trajectory& traj, Index r_max, double rank_tol = 1e-6);

}  // namespace lqgtl
