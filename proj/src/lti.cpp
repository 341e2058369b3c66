#include "lqgtl/lti.hpp"

#include <cmath>

namespace lqgtl {

namespace {

void require_shape(const Matrix& M, Index rows, Index cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols)
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()));
}

void check_compatible(const LinearSystem& sys, const Compensator& comp) {
  sys.validate();
  const Index n = comp.n();
  require_shape(comp.E, n, n, "compensator E");
  require_shape(comp.F, n, sys.m(), "compensator F");
  require_shape(comp.G, n, sys.l(), "compensator G");
  require_shape(comp.H, sys.m(), n, "compensator H");
}

Vector or_zero(const Vector& v, Index n, const char* what) {
  if (v.size() == 0) return Vector::Zero(n);
  if (v.size() != n) throw DimensionError(std::string(what) + ": wrong length");
  return v;
}

}  // namespace

void LinearSystem::validate(double tol) const {
  const Index nn = A.rows();
  if (nn == 0) throw InvalidInput("system: empty state");
  require_shape(A, nn, nn, "A");
  if (B.rows() != nn) throw DimensionError("B: row count differs from state dimension");
  if (C.cols() != nn) throw DimensionError("C: column count differs from state dimension");
  require_shape(W, nn, nn, "W");
  require_shape(V, C.rows(), C.rows(), "V");
  for (const Matrix* M : {&A, &B, &C, &W, &V}) require_finite(*M, "system");
  if ((W - W.transpose()).norm() > tol * std::max(1.0, W.norm()))
    throw InvalidInput("W is not symmetric");
  if ((V - V.transpose()).norm() > tol * std::max(1.0, V.norm()))
    throw InvalidInput("V is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> ew(W, Eigen::EigenvaluesOnly);
  if (ew.eigenvalues().minCoeff() < -tol * std::max(1.0, W.norm()))
    throw InvalidInput("W is not positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Matrix> ev(V, Eigen::EigenvaluesOnly);
  if (ev.eigenvalues().minCoeff() <= 0) throw InvalidInput("V is not positive definite");
}

void Trajectory::validate() const {
  if (inputs.cols() != outputs.cols())
    throw DimensionError("trajectory: input and output lengths differ");
  if (inputs.cols() < 1) throw InvalidInput("trajectory: no samples");
  require_finite(inputs, "trajectory inputs");
  require_finite(outputs, "trajectory outputs");
}

double NormalGenerator::uniform() {
  // 53 random bits mapped to [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalGenerator::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

Vector NormalGenerator::vector(Index size) {
  Vector g(size);
  for (Index i = 0; i < size; ++i) g(i) = (*this)();
  return g;
}

Matrix psd_sqrt(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

bool check_controllable(const Matrix& A, const Matrix& B, const ToleranceConfig& tol) {
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n) throw DimensionError("check_controllable: shapes");
  Matrix reach(n, n * B.cols());
  Matrix block = B;
  for (Index k = 0; k < n; ++k) {
    reach.middleCols(k * B.cols(), B.cols()) = block;
    block = A * block;
  }
  return numerical_rank(reach, tol) == n;
}

bool check_observable(const Matrix& A, const Matrix& C, const ToleranceConfig& tol) {
  if (A.cols() != C.cols()) throw DimensionError("check_observable: shapes");
  return check_controllable(A.transpose(), C.transpose(), tol);
}

ClosedLoopRun simulate_closed_loop_with_states(const LinearSystem& sys, const Compensator& comp,
                                               long T, std::uint64_t seed,
                                               const SimulationOptions& opts) {
  if (T < 1) throw InvalidInput("simulate_closed_loop: T must be positive");
  if (opts.burn_in < 0) throw InvalidInput("simulate_closed_loop: negative burn-in");
  check_compatible(sys, comp);
  const Index n = sys.n();
  const Matrix w_root = psd_sqrt(sys.W);
  const Matrix v_root = psd_sqrt(sys.V);
  NormalGenerator normal(seed);

  Vector x = or_zero(opts.x0, n, "x0");
  Vector xhat = or_zero(opts.xhat0, comp.n(), "xhat0");
  Vector y = sys.C * x + v_root * normal.vector(sys.l());

  const long total = opts.burn_in + T;
  ClosedLoopRun run;
  run.traj.inputs.resize(sys.m(), T + 1);
  run.traj.outputs.resize(sys.l(), T + 1);
  run.traj.start_time = opts.burn_in;
  run.states.resize(n, T + 1);
  for (long t = 0;; ++t) {
    const Vector u = comp.H * xhat;
    if (t >= opts.burn_in) {
      const long k = t - opts.burn_in;
      run.traj.inputs.col(k) = u;
      run.traj.outputs.col(k) = y;
      run.states.col(k) = x;
    }
    if (t == total) break;
    const Vector w = w_root * normal.vector(n);
    const Vector v = v_root * normal.vector(sys.l());
    x = sys.A * x + sys.B * u + w;
    y = sys.C * x + v;
    xhat = comp.E * xhat + comp.F * u + comp.G * y;
  }
  return run;
}

Trajectory simulate_closed_loop(const LinearSystem& sys, const Compensator& comp, long T,
                                std::uint64_t seed, const SimulationOptions& opts) {
  return simulate_closed_loop_with_states(sys, comp, T, seed, opts).traj;
}

ClosedLoopRun simulate_window_feedback(const LinearSystem& sys, const Matrix& K, Index depth,
                                       long T, std::uint64_t seed, const Vector& x0) {
  sys.validate();
  const Index n = sys.n(), m = sys.m(), l = sys.l();
  if (T < 1) throw InvalidInput("simulate_window_feedback: T must be positive");
  if (depth < 1) throw InvalidInput("simulate_window_feedback: depth must be positive");
  require_shape(K, m, depth * (m + l), "window gain");
  const Matrix w_root = psd_sqrt(sys.W);
  const Matrix v_root = psd_sqrt(sys.V);
  NormalGenerator normal(seed);

  ClosedLoopRun run;
  run.traj.inputs.setZero(m, T + 1);
  run.traj.outputs.resize(l, T + 1);
  run.states.resize(n, T + 1);
  Vector x = or_zero(x0, n, "x0");
  run.states.col(0) = x;
  run.traj.outputs.col(0) = sys.C * x + v_root * normal.vector(l);
  Vector window(depth * (m + l));
  for (long t = 0; t <= T; ++t) {
    if (t >= depth) {
      const long s = t - depth;
      for (Index k = 0; k < depth; ++k) {
        window.segment(k * m, m) = run.traj.inputs.col(s + k);
        window.segment(depth * m + k * l, l) = run.traj.outputs.col(s + k + 1);
      }
      run.traj.inputs.col(t) = K * window;
    }
    if (t == T) break;
    const Vector w = w_root * normal.vector(n);
    const Vector v = v_root * normal.vector(l);
    x = sys.A * x + sys.B * run.traj.inputs.col(t) + w;
    run.states.col(t + 1) = x;
    run.traj.outputs.col(t + 1) = sys.C * x + v;
  }
  return run;
}

double quadratic_cost(const ClosedLoopRun& run, const LqgTask& task, long T, long from) {
  if (T < 1 || from < 0 || from + T >= run.states.cols())
    throw InvalidInput("quadratic_cost: horizon out of range");
  double total = 0;
  for (long t = from; t < from + T; ++t) {
    const auto x = run.states.col(t);
    const auto u = run.traj.inputs.col(t);
    total += x.dot(task.Q * x) + u.dot(task.R * u);
  }
  return total / static_cast<double>(T);
}

double lqg_cost_estimate(const LinearSystem& sys, const Compensator& comp, const LqgTask& task,
                         long T, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InvalidInput("lqg_cost_estimate: no seeds");
  require_shape(task.Q, sys.n(), sys.n(), "Q");
  require_shape(task.R, sys.m(), sys.m(), "R");
  double total = 0;
  for (auto seed : seeds)
    total += quadratic_cost(simulate_closed_loop_with_states(sys, comp, T, seed), task, T);
  return total / static_cast<double>(seeds.size());
}

}  // namespace lqgtl
