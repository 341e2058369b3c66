#include "lqgtl/lqg.hpp"

namespace lqgtl {

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const DareOptions& opts) {
  const Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols())
    throw DimensionError("solve_dare: incompatible shapes");
  for (const Matrix* M : {&A, &B, &Q, &R}) require_finite(*M, "solve_dare");

  Matrix P = Q;
  for (long it = 1; it <= opts.max_iter; ++it) {
    const Matrix PA = P * A;
    const Matrix BtPA = B.transpose() * PA;
    const Matrix S = R + B.transpose() * P * B;
    Matrix next = A.transpose() * PA - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite()) throw NumericalFailure("solve_dare: iteration diverged", it);
    const double change = (next - P).norm();
    P = std::move(next);
    if (change <= opts.tol * std::max(P.norm(), 1e-300)) return P;
  }
  throw NumericalFailure("solve_dare: no convergence", opts.max_iter);
}

Matrix lqr_gain(const LinearSystem& sys, const LqgTask& task, const DareOptions& opts) {
  const Matrix P = solve_dare(sys.A, sys.B, task.Q, task.R, opts);
  const Matrix S = task.R + sys.B.transpose() * P * sys.B;
  return -S.ldlt().solve(sys.B.transpose() * P * sys.A);
}

Matrix kalman_gain(const LinearSystem& sys, const DareOptions& opts) {
  sys.validate();
  const Matrix Sigma = solve_dare(sys.A.transpose(), sys.C.transpose(), sys.W, sys.V, opts);
  const Matrix innovation = sys.C * Sigma * sys.C.transpose() + sys.V;
  // Sigma C' innovation^{-1}, via the symmetric solve on the transpose.
  return innovation.ldlt().solve(sys.C * Sigma).transpose();
}

Compensator compensator_from_gains(const LinearSystem& sys, const Matrix& filter_gain,
                                   const Matrix& feedback_gain) {
  const Index n = sys.n();
  const Matrix correction = Matrix::Identity(n, n) - filter_gain * sys.C;
  return {correction * sys.A, correction * sys.B, filter_gain, feedback_gain};
}

Compensator build_compensator(const LinearSystem& sys, const LqgTask& task,
                              const DareOptions& opts) {
  sys.validate();
  return compensator_from_gains(sys, kalman_gain(sys, opts), lqr_gain(sys, task, opts));
}

BlockMatrices block_matrices(const Compensator& comp, Index n) {
  const Index ns = comp.n(), m = comp.m(), l = comp.l();
  if (comp.E.cols() != ns || comp.F.rows() != ns || comp.G.rows() != ns || comp.H.cols() != ns ||
      comp.H.rows() != m)
    throw DimensionError("block_matrices: inconsistent compensator");

  std::vector<Matrix> powers(n + 1);
  powers[0] = Matrix::Identity(ns, ns);
  for (Index k = 1; k <= n; ++k) powers[k] = comp.E * powers[k - 1];

  BlockMatrices b;
  b.state_map.resize(n * m, ns);
  b.input_reach.resize(ns, n * m);
  b.output_reach.resize(ns, n * l);
  b.input_toeplitz.setZero(n * m, n * m);
  b.output_toeplitz.setZero(n * m, n * l);
  b.state_input_toeplitz.setZero(n * ns, n * m);
  b.state_output_toeplitz.setZero(n * ns, n * l);
  for (Index i = 0; i < n; ++i) {
    b.state_map.middleRows(i * m, m) = comp.H * powers[i];
    b.input_reach.middleCols(i * m, m) = powers[n - 1 - i] * comp.F;
    b.output_reach.middleCols(i * l, l) = powers[n - 1 - i] * comp.G;
    for (Index j = 0; j < i; ++j) {
      const Matrix du = powers[i - j - 1] * comp.F;
      const Matrix dy = powers[i - j - 1] * comp.G;
      b.state_input_toeplitz.block(i * ns, j * m, ns, m) = du;
      b.state_output_toeplitz.block(i * ns, j * l, ns, l) = dy;
      b.input_toeplitz.block(i * m, j * m, m, m) = comp.H * du;
      b.output_toeplitz.block(i * m, j * l, m, l) = comp.H * dy;
    }
  }
  return b;
}

Matrix static_lqg_gain(const Compensator& comp, Index n, const ToleranceConfig& tol) {
  const BlockMatrices b = block_matrices(comp, n);
  if (numerical_rank(b.state_map, tol) < comp.n())
    throw AssumptionViolation("static_lqg_gain: feedback rows do not observe the estimator state");
  const Index m = comp.m();
  const Matrix lift = matrix_power(comp.E, n) * pseudo_inverse(b.state_map, tol);
  Matrix window(comp.n(), n * (m + comp.l()));
  window << b.input_reach + lift * (Matrix::Identity(n * m, n * m) - b.input_toeplitz),
      b.output_reach - lift * b.output_toeplitz;
  return comp.H * window;
}

SeparationDecomposition separation_decomposition(const Compensator& comp, Index n,
                                                 const ToleranceConfig& tol) {
  if (comp.n() != n) throw DimensionError("separation_decomposition: window depth must equal state size");
  const BlockMatrices b = block_matrices(comp, n);
  const Index m = comp.m(), l = comp.l();
  SeparationDecomposition d;
  d.charpoly = char_poly_coeffs(comp.E, tol);
  const Matrix row = d.charpoly.transpose();
  const Matrix mix_state = kron(row, Matrix::Identity(n, n));
  d.estimation.setZero(n + m, n * (m + l));
  d.estimation.topLeftCorner(n, n * m) = b.input_reach - mix_state * b.state_input_toeplitz;
  d.estimation.topRightCorner(n, n * l) = b.output_reach - mix_state * b.state_output_toeplitz;
  d.estimation.bottomLeftCorner(m, n * m) = kron(row, Matrix::Identity(m, m));
  d.control.resize(m, n + m);
  d.control << comp.H, Matrix::Identity(m, m);
  return d;
}

Matrix static_gain_row(const Compensator& comp, Index n, Index row, const ToleranceConfig& tol) {
  const Index m = comp.m();
  if (row < 0 || row >= m) throw InvalidInput("static_gain_row: row index out of range");
  const BlockMatrices b = block_matrices(comp, n);
  Matrix row_map(n, comp.n());
  for (Index k = 0; k < n; ++k) row_map.row(k) = b.state_map.row(k * m + row);
  if (numerical_rank(row_map, tol) < comp.n())
    throw AssumptionViolation("static_gain_row: feedback row does not observe the estimator state");
  // Selector taking the full observability stack to this row's stack.
  const Matrix pinv_row = pseudo_inverse(row_map, tol);
  const Matrix selector = row_map * pseudo_inverse(b.state_map, tol);
  const Matrix lift = matrix_power(comp.E, n) * pinv_row;
  Matrix window(comp.n(), n * (m + comp.l()));
  window << b.input_reach + lift * (selector - selector * b.input_toeplitz),
      b.output_reach - lift * selector * b.output_toeplitz;
  return comp.H.row(row) * window;
}

bool check_assumption1(const Compensator& comp, const ToleranceConfig& tol) {
  for (Index i = 0; i < comp.H.rows(); ++i)
    if (!check_observable(comp.E, comp.H.row(i), tol)) return false;
  return check_controllable(comp.E, comp.G, tol);
}

}  // namespace lqgtl
