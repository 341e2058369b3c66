#include "lqgtl/imitation.hpp"

namespace lqgtl {

LearnedGain learn_klqg(const Trajectory& traj, Index n, const ToleranceConfig& tol,
                       double consistency_tol) {
  traj.validate();
  if (n < 1) throw InvalidInput("learn_klqg: state dimension must be positive");
  if (traj.length() < n)
    throw InsufficientData("learn_klqg: trajectory shorter than one window",
                           imitation_length(n, traj.l()));
  const Index c = traj.length() - n + 1;
  const DataMatrixPair pair = build_pair(traj, n, c);

  LearnedGain out;
  out.K = pair.next_inputs * pseudo_inverse(pair.windows, tol);
  out.unique = numerical_rank(pair.windows, tol) == pair.windows.rows();
  out.residual = (pair.next_inputs - out.K * pair.windows).norm() /
                 std::max(1.0, pair.next_inputs.norm());
  if (out.residual > consistency_tol)
    throw InconsistentData("learn_klqg: no static gain of this depth reproduces the inputs");
  return out;
}

}  // namespace lqgtl
