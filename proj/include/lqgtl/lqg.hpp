#pragma once

#include "lqgtl/lti.hpp"

namespace lqgtl {

struct DareOptions {
  double tol = 1e-12;
  long max_iter = 100000;
};

// Fixed point of P <- A'PA - A'PB (R + B'PB)^{-1} B'PA + Q, iterated from P = Q.
Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const DareOptions& opts = {});

// Stabilizing state feedback u = K x, K = -(R + B'PB)^{-1} B'PA.
Matrix lqr_gain(const LinearSystem& sys, const LqgTask& task, const DareOptions& opts = {});

// Steady-state gain of the current-estimate Kalman filter.
Matrix kalman_gain(const LinearSystem& sys, const DareOptions& opts = {});

// E = (I - Lf C) A, F = (I - Lf C) B, G = Lf, H = K_LQR.
Compensator build_compensator(const LinearSystem& sys, const LqgTask& task,
                              const DareOptions& opts = {});
Compensator compensator_from_gains(const LinearSystem& sys, const Matrix& filter_gain,
                                   const Matrix& feedback_gain);

// Response of the compensator over a window of depth n.
//   state_map     rows H E^i, i = 0..n-1
//   input_reach   [E^{n-1}F ... F]       output_reach   [E^{n-1}G ... G]
//   input_toeplitz  (i,j) block H E^{i-j-1} F for i > j, zero otherwise
//   state_input_toeplitz  the same blocks without the leading H
// and likewise for the outputs.
struct BlockMatrices {
  Matrix state_map;               // nm x n
  Matrix input_reach;             // n x nm
  Matrix output_reach;            // n x nl
  Matrix input_toeplitz;          // nm x nm
  Matrix output_toeplitz;         // nm x nl
  Matrix state_input_toeplitz;    // nn x nm
  Matrix state_output_toeplitz;   // nn x nl
};

BlockMatrices block_matrices(const Compensator& comp, Index n);

// Static gain mapping [U_n(t); Y_n(t+1)] to u(t+n) along every closed-loop
// trajectory of the compensator.
Matrix static_lqg_gain(const Compensator& comp, Index n, const ToleranceConfig& tol = {});

// Factorization of the static gain into a task-specific part
// control = [K_LQR, I_m] and a task-invariant estimation matrix.
struct SeparationDecomposition {
  Matrix control;     // m x (n+m)
  Matrix estimation;  // (n+m) x n(m+l)
  Vector charpoly;    // E^n = sum_k charpoly(k) E^k
};

SeparationDecomposition separation_decomposition(const Compensator& comp, Index n,
                                                 const ToleranceConfig& tol = {});

// Row `row` of the static gain built from that row's observability matrix only.
Matrix static_gain_row(const Compensator& comp, Index n, Index row,
                       const ToleranceConfig& tol = {});

// Every feedback row is observable through E and (E, G) is controllable.
bool check_assumption1(const Compensator& comp, const ToleranceConfig& tol = {});

}  // namespace lqgtl
