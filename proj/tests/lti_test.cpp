#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lqgtl/experiments.hpp"
#include "lqgtl/lqg.hpp"
#include "lqgtl/lti.hpp"

namespace lqgtl {
namespace {

// Reference normal stream written out from the documented algorithm.
std::vector<double> reference_normals(std::uint64_t seed, int count) {
  std::mt19937_64 engine(seed);
  auto uniform = [&] { return static_cast<double>(engine() >> 11) / 9007199254740992.0; };
  std::vector<double> out;
  while (static_cast<int>(out.size()) < count) {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    out.push_back(radius * std::cos(2.0 * M_PI * u2));
    out.push_back(radius * std::sin(2.0 * M_PI * u2));
  }
  out.resize(count);
  return out;
}

TEST(NormalGenerator, MatchesDocumentedAlgorithm) {
  NormalGenerator gen(42);
  const auto expected = reference_normals(42, 101);
  for (double value : expected) EXPECT_EQ(gen(), value);
}

TEST(NormalGenerator, UniformRange) {
  NormalGenerator gen(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = gen.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Controllability, Examples) {
  EXPECT_TRUE(check_controllable(Matrix::Zero(2, 2), Matrix::Identity(2, 2)));
  EXPECT_FALSE(check_controllable(Matrix::Identity(2, 2), Eigen::Vector2d(1, 0)));
  const LinearSystem sys = reactor_system(false);
  EXPECT_TRUE(check_controllable(sys.A, sys.B));
  EXPECT_THROW(check_controllable(Matrix::Identity(2, 2), Matrix::Identity(3, 1)), DimensionError);
}

TEST(Observability, Examples) {
  EXPECT_TRUE(check_observable(Matrix::Zero(2, 2), Matrix::Identity(2, 2)));
  Matrix c(1, 2);
  c << 1, 0;
  EXPECT_FALSE(check_observable(Matrix::Identity(2, 2), c));
  const LinearSystem sys = reactor_system(false);
  EXPECT_TRUE(check_observable(sys.A, sys.C));
}

TEST(LinearSystem, ValidateRejectsBadCovariances) {
  LinearSystem sys = reactor_system(false);
  EXPECT_NO_THROW(sys.validate());
  sys.V(0, 0) = 0;
  EXPECT_THROW(sys.validate(), InvalidInput);
  sys = reactor_system(false);
  sys.W(0, 1) = 1;
  EXPECT_THROW(sys.validate(), InvalidInput);
  sys = reactor_system(false);
  sys.W(0, 0) = -1;
  EXPECT_THROW(sys.validate(), InvalidInput);
  sys = reactor_system(false);
  sys.B = Matrix::Zero(3, 1);
  EXPECT_THROW(sys.validate(), DimensionError);
}

TEST(PsdSqrt, ClampsNegativeEigenvalues) {
  Matrix S(2, 2);
  S << 4, 0, 0, -1e-14;
  const Matrix R = psd_sqrt(S);
  EXPECT_NEAR(R(0, 0), 2, 1e-14);
  EXPECT_EQ(R(1, 1), 0);
}

TEST(Simulation, NoiselessStaysAtRest) {
  LinearSystem sys = reactor_system(false);
  sys.W = 1e-30 * Matrix::Identity(4, 4);
  sys.V = 1e-30 * Matrix::Identity(1, 1);
  const Compensator comp = build_compensator(reactor_system(false), reactor_target_task(false));
  const Trajectory traj = simulate_closed_loop(sys, comp, 50, 1);
  EXPECT_LE(traj.inputs.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(traj.outputs.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulation, DeterministicAndSized) {
  const LinearSystem sys = reactor_system(false);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  const Trajectory a = simulate_closed_loop(sys, comp, 30, 99);
  const Trajectory b = simulate_closed_loop(sys, comp, 30, 99);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_EQ(a.samples(), 31);
  EXPECT_EQ(a.length(), 30);
  EXPECT_EQ(a.outputs.cols(), 31);
  const Trajectory c = simulate_closed_loop(sys, comp, 30, 100);
  EXPECT_NE(a.outputs, c.outputs);
}

TEST(Simulation, FollowsStateSpaceRecursion) {
  // Independent replay of the recursion with the reference noise stream.
  const LinearSystem sys = reactor_system(true);
  const Compensator comp = build_compensator(sys, reactor_target_task(true));
  const long T = 12;
  Vector x0(4), xhat0(4);
  x0 << 1, -2, 0.5, 3;
  xhat0 << 0.1, 0.2, -0.3, 0.4;
  SimulationOptions opts;
  opts.x0 = x0;
  opts.xhat0 = xhat0;
  const ClosedLoopRun run = simulate_closed_loop_with_states(sys, comp, T, 5, opts);

  const auto g = reference_normals(5, 1 + 5 * T);
  const Matrix w_root = psd_sqrt(sys.W), v_root = psd_sqrt(sys.V);
  int at = 0;
  auto take = [&](Index k) {
    Vector v(k);
    for (Index i = 0; i < k; ++i) v(i) = g[at++];
    return v;
  };
  Vector x = x0, xhat = xhat0;
  Vector y = sys.C * x + v_root * take(1);
  for (long t = 0; t <= T; ++t) {
    const Vector u = comp.H * xhat;
    EXPECT_LE((run.traj.inputs.col(t) - u).norm(), 1e-12);
    EXPECT_LE((run.traj.outputs.col(t) - y).norm(), 1e-12);
    EXPECT_LE((run.states.col(t) - x).norm(), 1e-12);
    if (t == T) break;
    const Vector w = w_root * take(4);
    const Vector v = v_root * take(1);
    x = sys.A * x + sys.B * u + w;
    y = sys.C * x + v;
    xhat = comp.E * xhat + comp.F * u + comp.G * y;
  }
}

TEST(Simulation, BurnInShiftsStartTime) {
  const LinearSystem sys = reactor_system(false);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  SimulationOptions opts;
  opts.burn_in = 7;
  const Trajectory full = simulate_closed_loop(sys, comp, 17, 4);
  const Trajectory late = simulate_closed_loop(sys, comp, 10, 4, opts);
  EXPECT_EQ(late.start_time, 7);
  EXPECT_EQ(late.outputs, full.outputs.rightCols(11));
}

TEST(Simulation, OptimalClosedLoopBounded) {
  const LinearSystem sys = reactor_system(false);
  ASSERT_GT(spectral_radius(sys.A), 1.0);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  const ClosedLoopRun run = simulate_closed_loop_with_states(sys, comp, 500, 11);
  ASSERT_TRUE(run.states.allFinite());
  const Matrix centered = run.states.colwise() - run.states.rowwise().mean();
  const Matrix cov = centered * centered.transpose() / 500.0;
  EXPECT_LT(cov.trace(), 1e4);
  EXPECT_LT(run.states.rightCols(100).cwiseAbs().maxCoeff(), 1e3);
}

TEST(Simulation, RejectsBadArguments) {
  const LinearSystem sys = reactor_system(false);
  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  EXPECT_THROW(simulate_closed_loop(sys, comp, 0, 1), InvalidInput);
  SimulationOptions opts;
  opts.x0 = Vector::Zero(3);
  EXPECT_THROW(simulate_closed_loop(sys, comp, 5, 1, opts), DimensionError);
  Compensator wrong = comp;
  wrong.G = Matrix::Zero(4, 2);
  EXPECT_THROW(simulate_closed_loop(sys, wrong, 5, 1), DimensionError);
}

TEST(CostEstimate, ZeroWeightsAndZeroGain) {
  const LinearSystem sys = reactor_system(false);
  Compensator comp = build_compensator(sys, reactor_target_task(false));
  comp.H.setZero();
  const LqgTask task{Matrix::Zero(4, 4), Matrix::Identity(1, 1), ""};
  EXPECT_EQ(lqg_cost_estimate(sys, comp, task, 100, {1, 2}), 0.0);
  EXPECT_THROW(lqg_cost_estimate(sys, comp, task, 100, {}), InvalidInput);
}

TEST(CostEstimate, LinearInStateWeight) {
  const LinearSystem sys = reactor_system(false);
  const LqgTask task = reactor_target_task(false);
  const Compensator comp = build_compensator(sys, task);
  const LqgTask state_only{task.Q, Matrix::Zero(1, 1), ""};
  const LqgTask doubled{2 * task.Q, Matrix::Zero(1, 1), ""};
  const double base = lqg_cost_estimate(sys, comp, state_only, 300, {3, 4, 5});
  EXPECT_NEAR(lqg_cost_estimate(sys, comp, doubled, 300, {3, 4, 5}), 2 * base, 1e-9 * base);
}

TEST(CostEstimate, OptimalBeatsScaledGain) {
  const LinearSystem sys = reactor_system(false);
  const LqgTask task = reactor_target_task(false);
  const Compensator comp = build_compensator(sys, task);
  Compensator scaled = comp;
  scaled.H *= 1.2;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 50; ++s) seeds.push_back(1000 + s);
  EXPECT_LE(lqg_cost_estimate(sys, comp, task, 2000, seeds),
            lqg_cost_estimate(sys, scaled, task, 2000, seeds));
}

TEST(QuadraticCost, WindowOffset) {
  const LinearSystem sys = reactor_system(false);
  const LqgTask task = reactor_target_task(false);
  const ClosedLoopRun run =
      simulate_closed_loop_with_states(sys, build_compensator(sys, task), 20, 2);
  double expected = 0;
  for (long t = 5; t < 15; ++t) {
    const Vector x = run.states.col(t);
    const Vector u = run.traj.inputs.col(t);
    expected += x.dot(task.Q * x) + u.dot(task.R * u);
  }
  EXPECT_NEAR(quadratic_cost(run, task, 10, 5), expected / 10, 1e-12 * expected);
  EXPECT_THROW(quadratic_cost(run, task, 20, 1), InvalidInput);
  EXPECT_THROW(quadratic_cost(run, task, 5, -1), InvalidInput);
}

TEST(WindowFeedback, StartsWithZeroInputs) {
  const LinearSystem sys = reactor_system(false);
  const Matrix K = Matrix::Ones(1, 8);
  const ClosedLoopRun run = simulate_window_feedback(sys, K, 4, 10, 1);
  EXPECT_EQ(run.traj.inputs.leftCols(4), Matrix::Zero(1, 4));
  Vector window(8);
  window << run.traj.inputs.col(0), run.traj.inputs.col(1), run.traj.inputs.col(2),
      run.traj.inputs.col(3), run.traj.outputs.col(1), run.traj.outputs.col(2),
      run.traj.outputs.col(3), run.traj.outputs.col(4);
  EXPECT_NEAR(run.traj.inputs(0, 4), window.sum(), 1e-12);
  EXPECT_THROW(simulate_window_feedback(sys, Matrix::Ones(1, 7), 4, 10, 1), DimensionError);
}

}  // namespace
}  // namespace lqgtl
