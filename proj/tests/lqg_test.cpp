#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "lqgtl/experiments.hpp"
#include "lqgtl/lqg.hpp"

namespace lqgtl {
namespace {

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(lo) * f(mid) <= 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Positive root of p = a^2 p - a^2 b^2 p^2 / (r + b^2 p) + q.
double scalar_riccati(double a, double b, double q, double r) {
  return bisect([&](double p) { return a * a * p - a * a * b * b * p * p / (r + b * b * p) + q - p; },
                0.0, 1e3);
}

LinearSystem scalar_system(double a, double b, double c, double w, double v) {
  LinearSystem sys;
  sys.A = Matrix::Constant(1, 1, a);
  sys.B = Matrix::Constant(1, 1, b);
  sys.C = Matrix::Constant(1, 1, c);
  sys.W = Matrix::Constant(1, 1, w);
  sys.V = Matrix::Constant(1, 1, v);
  return sys;
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

struct Ensemble {
  std::vector<EnsembleDraw> draws;
};

const Ensemble& ensemble() {
  static const Ensemble e = [] {
    Ensemble out;
    for (int k = 0; k < 100; ++k) {
      NormalGenerator rng(derive_seed(77, 1, k));
      out.draws.push_back(random_lqg_problem(rng));
    }
    return out;
  }();
  return e;
}

TEST(SolveDare, ZeroDynamicsGivesQ) {
  const Matrix Q = Eigen::Vector2d(2, 3).asDiagonal();
  const Matrix P = solve_dare(Matrix::Zero(2, 2), Matrix::Identity(2, 1), Q, Matrix::Identity(1, 1));
  EXPECT_LE((P - Q).norm(), 1e-15);
}

TEST(SolveDare, ScalarMatchesBisection) {
  const double p_ref = scalar_riccati(0.5, 1, 1, 1);
  EXPECT_NEAR(p_ref, 1.1327822, 1e-7);
  const Matrix P = solve_dare(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                              Matrix::Ones(1, 1));
  EXPECT_NEAR(P(0, 0), p_ref, 1e-10);
}

TEST(SolveDare, ReactorPlugBackResidual) {
  const LinearSystem sys = reactor_system(false);
  const LqgTask task = reactor_target_task(false);
  const Matrix& A = sys.A;
  const Matrix& B = sys.B;
  const Matrix P = solve_dare(A, B, task.Q, task.R);
  const Matrix S = task.R + B.transpose() * P * B;
  const Matrix residual = A.transpose() * P * A -
                          A.transpose() * P * B * S.inverse() * B.transpose() * P * A + task.Q - P;
  EXPECT_LE(residual.norm() / P.norm(), 1e-10);
  EXPECT_LE((P - P.transpose()).norm(), 1e-12);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff(), 0.0);
}

TEST(SolveDare, ReportsNonConvergence) {
  DareOptions opts;
  opts.max_iter = 2;
  const LinearSystem sys = reactor_system(false);
  try {
    solve_dare(sys.A, sys.B, Matrix::Identity(4, 4), Matrix::Identity(1, 1), opts);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_EQ(e.iterations(), 2);
  }
  EXPECT_THROW(solve_dare(sys.A, sys.B, Matrix::Identity(3, 3), Matrix::Identity(1, 1)), DimensionError);
}

TEST(LqrGain, ScalarClosedForm) {
  const double p = scalar_riccati(0.5, 1, 1, 1);
  const LinearSystem sys = scalar_system(0.5, 1, 1, 1, 1);
  const Matrix K = lqr_gain(sys, {Matrix::Ones(1, 1), Matrix::Ones(1, 1), ""});
  EXPECT_NEAR(K(0, 0), -0.5 * p / (1 + p), 1e-10);
  EXPECT_NEAR(K(0, 0), -0.2655644, 1e-7);
}

TEST(LqrGain, ReactorStabilizes) {
  for (bool two : {false, true}) {
    const LinearSystem sys = reactor_system(two);
    const Matrix K = lqr_gain(sys, reactor_target_task(two));
    EXPECT_LT(spectral_radius(Matrix(sys.A + sys.B * K)), 1.0);
  }
}

TEST(LqrGain, ScalingInvariance) {
  const LinearSystem sys = reactor_system(true);
  const LqgTask task = reactor_target_task(true);
  const LqgTask scaled{7.5 * task.Q, 7.5 * task.R, ""};
  EXPECT_LE(rel(lqr_gain(sys, scaled), lqr_gain(sys, task)), 1e-8);
  const Index n = sys.n();
  EXPECT_LE(rel(static_lqg_gain(build_compensator(sys, scaled), n),
                static_lqg_gain(build_compensator(sys, task), n)),
            1e-8);
}

TEST(KalmanGain, ScalarMatchesBisection) {
  const double sigma = scalar_riccati(0.5, 1, 1, 1);
  const Matrix L = kalman_gain(scalar_system(0.5, 1, 1, 1, 1));
  EXPECT_NEAR(L(0, 0), sigma / (sigma + 1), 1e-10);
  EXPECT_NEAR(L(0, 0), 0.5311289, 1e-7);
}

TEST(KalmanGain, PerfectMeasurementLimit) {
  LinearSystem sys = reactor_system(false);
  sys.C = Matrix::Identity(4, 4);
  sys.V = 1e-8 * Matrix::Identity(4, 4);
  EXPECT_LE((kalman_gain(sys) - Matrix::Identity(4, 4)).norm(), 1e-3);
}

TEST(KalmanGain, ReactorFilterStable) {
  const LinearSystem sys = reactor_system(false);
  const Matrix L = kalman_gain(sys);
  EXPECT_LT(spectral_radius(Matrix((Matrix::Identity(4, 4) - L * sys.C) * sys.A)), 1.0);
}

TEST(Compensator, FormulaAndZeroFilterGain) {
  const LinearSystem sys = reactor_system(false);
  const Matrix H = lqr_gain(sys, reactor_target_task(false));
  const Compensator plain = compensator_from_gains(sys, Matrix::Zero(4, 1), H);
  EXPECT_EQ(plain.E, sys.A);
  EXPECT_EQ(plain.F, sys.B);

  const Compensator comp = build_compensator(sys, reactor_target_task(false));
  const Matrix I = Matrix::Identity(4, 4);
  EXPECT_LE((comp.E - (I - comp.G * sys.C) * sys.A).norm(), 1e-14);
  EXPECT_LE((comp.F - (I - comp.G * sys.C) * sys.B).norm(), 1e-14);
  EXPECT_LE((comp.H - H).norm(), 1e-14);
}

TEST(Compensator, ReactorClosedLoopStable) {
  for (bool two : {false, true}) {
    const LinearSystem sys = reactor_system(two);
    const Compensator c = build_compensator(sys, reactor_target_task(two));
    Matrix M(8, 8);
    M << sys.A, sys.B * c.H, c.G * sys.C * sys.A, c.E + c.F * c.H + c.G * sys.C * sys.B * c.H;
    EXPECT_LT(spectral_radius(M), 1.0);
    EXPECT_TRUE(check_assumption1(c));
  }
}

TEST(Assumption1, ZeroFeedbackFails) {
  Compensator c = build_compensator(reactor_system(false), reactor_target_task(false));
  c.H.setZero();
  EXPECT_FALSE(check_assumption1(c));
}

TEST(BlockMatrices, SingleBlock) {
  const Compensator c = build_compensator(scalar_system(0.5, 1, 1, 1, 1),
                                          {Matrix::Ones(1, 1), Matrix::Ones(1, 1), ""});
  const BlockMatrices b = block_matrices(c, 1);
  EXPECT_EQ(b.state_map, c.H);
  EXPECT_EQ(b.input_reach, c.F);
  EXPECT_EQ(b.input_toeplitz, Matrix::Zero(1, 1));
  EXPECT_EQ(b.state_input_toeplitz, Matrix::Zero(1, 1));
}

TEST(BlockMatrices, ToeplitzFactorization) {
  NormalGenerator rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 3, m = 2, l = 2;
    Compensator c{rng.vector(n * n).reshaped(n, n), rng.vector(n * m).reshaped(n, m),
                  rng.vector(n * l).reshaped(n, l), rng.vector(m * n).reshaped(m, n)};
    const BlockMatrices b = block_matrices(c, n);
    Matrix lift = Matrix::Zero(n * m, n * n);
    for (Index i = 0; i < n; ++i) lift.block(i * m, i * n, m, n) = c.H;
    EXPECT_LE((b.input_toeplitz - lift * b.state_input_toeplitz).norm(), 1e-12);
    EXPECT_LE((b.output_toeplitz - lift * b.state_output_toeplitz).norm(), 1e-12);
    // Strictly block lower triangular.
    for (Index i = 0; i < n; ++i)
      for (Index j = i; j < n; ++j) {
        EXPECT_EQ(b.input_toeplitz.block(i * m, j * m, m, m).norm(), 0);
        EXPECT_EQ(b.state_output_toeplitz.block(i * n, j * l, n, l).norm(), 0);
      }
  }
}

TEST(BlockMatrices, ReactorStateMapInvertible) {
  const BlockMatrices b = block_matrices(build_compensator(reactor_system(false), reactor_target_task(false)), 4);
  ASSERT_EQ(b.state_map.rows(), 4);
  ASSERT_EQ(b.state_map.cols(), 4);
  EXPECT_EQ(numerical_rank(b.state_map), 4);
}

TEST(StaticGain, ScalarRecursionElimination) {
  // n = 1: u(t+1) = H xhat(t+1) with xhat(t) = u(t) / H gives
  // u(t+1) = (E + H F) u(t) + H G y(t+1).
  const Compensator c = build_compensator(scalar_system(0.8, 0.7, 1.3, 0.5, 0.4),
                                          {Matrix::Constant(1, 1, 2.0), Matrix::Ones(1, 1), ""});
  const Matrix K = static_lqg_gain(c, 1);
  EXPECT_NEAR(K(0, 0), c.E(0, 0) + c.H(0, 0) * c.F(0, 0), 1e-12);
  EXPECT_NEAR(K(0, 1), c.H(0, 0) * c.G(0, 0), 1e-12);
}

TEST(StaticGain, ReproducesCompensatorInputs) {
  for (bool two : {false, true}) {
    const LinearSystem sys = reactor_system(two);
    const Compensator c = build_compensator(sys, reactor_target_task(two));
    const Matrix K = static_lqg_gain(c, 4);
    const Trajectory traj = simulate_closed_loop(sys, c, 60, 21);
    const Index m = sys.m(), l = sys.l();
    for (Index t = 0; t + 4 <= traj.length(); ++t) {
      Vector window(4 * (m + l));
      for (Index k = 0; k < 4; ++k) {
        window.segment(k * m, m) = traj.inputs.col(t + k);
        window.segment(4 * m + k * l, l) = traj.outputs.col(t + k + 1);
      }
      EXPECT_LE((traj.inputs.col(t + 4) - K * window).norm(), 1e-9);
    }
  }
}

TEST(StaticGain, RequiresObservableFeedback) {
  Compensator c = build_compensator(reactor_system(false), reactor_target_task(false));
  c.H.setZero();
  EXPECT_THROW(static_lqg_gain(c, 4), AssumptionViolation);
}

TEST(Separation, StructureOnReactor) {
  const Compensator c = build_compensator(reactor_system(false), reactor_target_task(false));
  const SeparationDecomposition d = separation_decomposition(c, 4);
  ASSERT_EQ(d.estimation.rows(), 5);
  ASSERT_EQ(d.estimation.cols(), 8);
  EXPECT_EQ(d.control.rightCols(1), Matrix::Identity(1, 1));
  EXPECT_EQ(d.estimation.bottomLeftCorner(1, 4), Matrix(d.charpoly.transpose()));
  EXPECT_EQ(d.estimation.bottomRightCorner(1, 4).norm(), 0);
  const Matrix K = static_lqg_gain(c, 4);
  EXPECT_LE(rel(d.control * d.estimation, K), 1e-8);
  const Matrix projector = Matrix::Identity(8, 8) - pseudo_inverse(d.estimation) * d.estimation;
  EXPECT_LE((K * projector).norm(), 1e-8);
  EXPECT_THROW(separation_decomposition(c, 3), DimensionError);
}

TEST(Separation, ProductMatchesStaticGainOnEnsemble) {
  for (const auto& draw : ensemble().draws) {
    const Compensator c = build_compensator(draw.sys, draw.task);
    const Index n = draw.sys.n(), m = draw.sys.m();
    const SeparationDecomposition d = separation_decomposition(c, n);
    EXPECT_LE(rel(d.control * d.estimation, static_lqg_gain(c, n)), 1e-8)
        << "n=" << n << " m=" << m << " l=" << draw.sys.l();
    EXPECT_EQ(numerical_rank(d.estimation), n + m);
  }
}

TEST(Separation, ProductReproducesCompensatorInputs) {
  // Whatever gain is chosen among the data-consistent ones, the separation
  // product must map windows to the recorded inputs.
  for (int k = 0; k < 20; ++k) {
    const EnsembleDraw& draw = ensemble().draws[k];
    const Compensator c = build_compensator(draw.sys, draw.task);
    const Index n = draw.sys.n(), m = draw.sys.m(), l = draw.sys.l();
    const SeparationDecomposition d = separation_decomposition(c, n);
    const Matrix K = d.control * d.estimation;
    const Trajectory traj = simulate_closed_loop(draw.sys, c, 3 * n * (m + l), derive_seed(5, k));
    double worst = 0, scale = 0;
    for (Index t = 0; t + n <= traj.length(); ++t) {
      Vector window(n * (m + l));
      for (Index j = 0; j < n; ++j) {
        window.segment(j * m, m) = traj.inputs.col(t + j);
        window.segment(n * m + j * l, l) = traj.outputs.col(t + j + 1);
      }
      worst = std::max(worst, (traj.inputs.col(t + n) - K * window).norm());
      scale = std::max(scale, traj.inputs.col(t + n).norm());
    }
    EXPECT_LE(worst, 1e-9 * std::max(1.0, scale)) << "draw " << k;
  }
}

TEST(RowGains, SingleInputCollapse) {
  const Compensator c = build_compensator(reactor_system(false), reactor_target_task(false));
  EXPECT_LE(rel(static_gain_row(c, 4, 0), static_lqg_gain(c, 4)), 1e-12);
  EXPECT_THROW(static_gain_row(c, 4, 1), InvalidInput);
}

TEST(RowGains, TwoInputReactorAndEnsemble) {
  const Compensator c = build_compensator(reactor_system(true), reactor_target_task(true));
  const Matrix K = static_lqg_gain(c, 4);
  for (Index i = 0; i < 2; ++i) EXPECT_LE(rel(static_gain_row(c, 4, i), K.row(i)), 1e-8);
  for (const auto& draw : ensemble().draws) {
    if (draw.sys.m() != 2) continue;
    const Compensator cc = build_compensator(draw.sys, draw.task);
    const Matrix KK = static_lqg_gain(cc, draw.sys.n());
    for (Index i = 0; i < 2; ++i) EXPECT_LE(rel(static_gain_row(cc, draw.sys.n(), i), KK.row(i)), 1e-8);
  }
}

}  // namespace
}  // namespace lqgtl
