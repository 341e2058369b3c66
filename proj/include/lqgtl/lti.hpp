#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lqgtl/linalg.hpp"

namespace lqgtl {

// x(t+1) = A x(t) + B u(t) + w(t),  y(t) = C x(t) + v(t),
// w ~ N(0, W), v ~ N(0, V).
struct LinearSystem {
  Matrix A, B, C, W, V;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  Index l() const { return C.rows(); }
  // Throws DimensionError / InvalidInput when shapes or covariances are off.
  void validate(double tol = 1e-10) const;
};

// Dynamic output-feedback controller
//   xhat(t+1) = E xhat(t) + F u(t) + G y(t+1),  u(t) = H xhat(t).
struct Compensator {
  Matrix E, F, G, H;

  Index n() const { return E.rows(); }
  Index m() const { return F.cols(); }
  Index l() const { return G.cols(); }
};

struct LqgTask {
  Matrix Q, R;
  std::string label;
};

// Samples t = start_time ... start_time + T. Column k of `inputs` is u at
// sample k, and likewise for `outputs`.
struct Trajectory {
  Matrix inputs;   // m x (T+1)
  Matrix outputs;  // l x (T+1)
  long start_time = 0;

  Index m() const { return inputs.rows(); }
  Index l() const { return outputs.rows(); }
  Index samples() const { return inputs.cols(); }
  // Number of steps T; the trajectory holds T + 1 samples.
  long length() const { return static_cast<long>(inputs.cols()) - 1; }
  void validate() const;
};

// Standard normal generator with a fixed algorithm so that seeds are portable:
// mt19937_64 supplies 53-bit uniforms, Box-Muller turns pairs of them into
// two normals, and the second normal of each pair is served on the next call.
class NormalGenerator {
 public:
  explicit NormalGenerator(std::uint64_t seed) : engine_(seed) {}
  double operator()();
  Vector vector(Index size);
  // Uniform on [0, 1) from the top 53 bits of one engine draw.
  double uniform();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0;
};

// Symmetric PSD square root with negative eigenvalues clamped to zero.
Matrix psd_sqrt(const Matrix& S);

bool check_controllable(const Matrix& A, const Matrix& B, const ToleranceConfig& tol = {});
bool check_observable(const Matrix& A, const Matrix& C, const ToleranceConfig& tol = {});

struct SimulationOptions {
  Vector x0;          // defaults to zero
  Vector xhat0;       // defaults to zero
  long burn_in = 0;   // steps simulated and discarded before recording
};

struct ClosedLoopRun {
  Trajectory traj;
  Matrix states;  // n x (T+1)
};

// Trajectory of T steps (T+1 samples). y(0) = C x0 + v(0); noise is drawn as
// w(t) before v(t+1) in every step.
Trajectory simulate_closed_loop(const LinearSystem& sys, const Compensator& comp, long T,
                                std::uint64_t seed, const SimulationOptions& opts = {});
ClosedLoopRun simulate_closed_loop_with_states(const LinearSystem& sys, const Compensator& comp,
                                               long T, std::uint64_t seed,
                                               const SimulationOptions& opts = {});

// Closed loop under a static gain on past windows:
//   u(t+depth) = K [u(t); ...; u(t+depth-1); y(t+1); ...; y(t+depth)].
// The first `depth` inputs are zero since no full window exists yet.
ClosedLoopRun simulate_window_feedback(const LinearSystem& sys, const Matrix& K, Index depth,
                                       long T, std::uint64_t seed, const Vector& x0 = {});

// Average over seeds of (1/T) sum_{t<T} x'Qx + u'Ru.
double lqg_cost_estimate(const LinearSystem& sys, const Compensator& comp, const LqgTask& task,
                         long T, const std::vector<std::uint64_t>& seeds);

// (1/T) sum over t = from .. from+T-1 of x'Qx + u'Ru.
double quadratic_cost(const ClosedLoopRun& run, const LqgTask& task, long T, long from = 0);

}  // namespace lqgtl
