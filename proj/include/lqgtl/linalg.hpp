#pragma once

// Tolerance-aware dense kernels. Everything here is header-only and accepts
// arbitrary Eigen expressions; results are plain dynamic matrices of the
// expression's scalar type.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lqgtl/errors.hpp"

namespace lqgtl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// rank_tol is relative to the largest singular value; residual_tol bounds
// relative residuals of solved equations.
struct ToleranceConfig {
  double rank_tol = 1e-9;
  double residual_tol = 1e-7;
};

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& M, const char* what) {
  if (!M.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entry");
}

namespace detail {

template <class Derived>
auto full_svd(const Eigen::MatrixBase<Derived>& M) {
  using S = typename Derived::Scalar;
  return Eigen::JacobiSVD<MatrixX<S>>(M.eval(), Eigen::ComputeFullU | Eigen::ComputeFullV);
}

template <class SV>
Index count_above(const SV& sv, double rel_tol) {
  if (sv.size() == 0 || sv(0) == 0) return 0;
  const auto cut = rel_tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return r;
}

}  // namespace detail

template <class Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& M, const ToleranceConfig& tol = {}) {
  if (M.size() == 0) throw InvalidInput("numerical_rank: empty matrix");
  require_finite(M, "numerical_rank");
  using S = typename Derived::Scalar;
  Eigen::JacobiSVD<MatrixX<S>> svd(M.eval());
  return detail::count_above(svd.singularValues(), tol.rank_tol);
}

template <class Derived>
MatrixX<typename Derived::Scalar> pseudo_inverse(const Eigen::MatrixBase<Derived>& M,
                                                 const ToleranceConfig& tol = {}) {
  using S = typename Derived::Scalar;
  if (M.size() == 0) throw InvalidInput("pseudo_inverse: empty matrix");
  require_finite(M, "pseudo_inverse");
  Eigen::JacobiSVD<MatrixX<S>> svd(M.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index r = detail::count_above(svd.singularValues(), tol.rank_tol);
  const auto& U = svd.matrixU();
  const auto& V = svd.matrixV();
  VectorX<S> inv = svd.singularValues().head(r).cwiseInverse();
  return V.leftCols(r) * inv.asDiagonal() * U.leftCols(r).transpose();
}

// Orthonormal columns spanning Ker(M); zero columns when the kernel is trivial.
template <class Derived>
MatrixX<typename Derived::Scalar> nullspace_basis(const Eigen::MatrixBase<Derived>& M,
                                                  const ToleranceConfig& tol = {}) {
  if (M.size() == 0) throw InvalidInput("nullspace_basis: empty matrix");
  require_finite(M, "nullspace_basis");
  auto svd = detail::full_svd(M);
  const Index r = detail::count_above(svd.singularValues(), tol.rank_tol);
  return svd.matrixV().rightCols(M.cols() - r);
}

template <class Scalar>
MatrixX<Scalar> intersect_kernels(const std::vector<MatrixX<Scalar>>& Ms,
                                  const ToleranceConfig& tol = {}) {
  if (Ms.empty()) throw InvalidInput("intersect_kernels: empty list");
  const Index cols = Ms.front().cols();
  Index rows = 0;
  for (const auto& M : Ms) {
    if (M.cols() != cols) throw DimensionError("intersect_kernels: column counts differ");
    rows += M.rows();
  }
  MatrixX<Scalar> stack(rows, cols);
  Index at = 0;
  for (const auto& M : Ms) {
    stack.middleRows(at, M.rows()) = M;
    at += M.rows();
  }
  return nullspace_basis(stack, tol);
}

// Rows form an orthonormal basis of the orthogonal complement of span(B).
template <class Derived>
MatrixX<typename Derived::Scalar> orth_complement_basis(const Eigen::MatrixBase<Derived>& B,
                                                        const ToleranceConfig& tol = {}) {
  using S = typename Derived::Scalar;
  require_finite(B, "orth_complement_basis");
  const Index dim = B.rows();
  if (B.cols() == 0) return MatrixX<S>::Identity(dim, dim);
  auto svd = detail::full_svd(B);
  const Index r = detail::count_above(svd.singularValues(), tol.rank_tol);
  return svd.matrixU().rightCols(dim - r).transpose();
}

// Orthonormal rows spanning the row space of M.
template <class Derived>
MatrixX<typename Derived::Scalar> row_space_basis(const Eigen::MatrixBase<Derived>& M,
                                                  const ToleranceConfig& tol = {}) {
  require_finite(M, "row_space_basis");
  auto svd = detail::full_svd(M);
  const Index r = detail::count_above(svd.singularValues(), tol.rank_tol);
  return svd.matrixV().leftCols(r).transpose();
}

template <class DA, class DB>
MatrixX<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B) {
  return Eigen::kroneckerProduct(A.eval(), B.eval()).eval();
}

template <class Derived>
VectorX<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& M) {
  return M.eval().reshaped();
}

template <class Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  if (A.rows() != A.cols()) throw DimensionError("spectral_radius: matrix not square");
  if (A.size() == 0) return 0;
  return A.eval().eigenvalues().cwiseAbs().maxCoeff();
}

template <class Derived>
MatrixX<typename Derived::Scalar> matrix_power(const Eigen::MatrixBase<Derived>& M, Index k) {
  using S = typename Derived::Scalar;
  if (M.rows() != M.cols()) throw DimensionError("matrix_power: matrix not square");
  if (k < 0) throw InvalidInput("matrix_power: negative exponent");
  MatrixX<S> result = MatrixX<S>::Identity(M.rows(), M.cols());
  MatrixX<S> base = M;
  for (; k > 0; k >>= 1) {
    if (k & 1) result = result * base;
    base = base * base;
  }
  return result;
}

// Coefficients a with E^n = a_0 I + a_1 E + ... + a_{n-1} E^{n-1}.
// Faddeev-LeVerrier gives the characteristic polynomial itself, which stays
// well defined when E is derogatory; a vectorized least-squares refit of the
// same identity is the fallback when the recursion loses accuracy.
template <class Derived>
VectorX<typename Derived::Scalar> char_poly_coeffs(const Eigen::MatrixBase<Derived>& E,
                                                   const ToleranceConfig& tol = {}) {
  using S = typename Derived::Scalar;
  if (E.rows() != E.cols()) throw DimensionError("char_poly_coeffs: matrix not square");
  require_finite(E, "char_poly_coeffs");
  const Index n = E.rows();
  const MatrixX<S> Em = E;
  const MatrixX<S> I = MatrixX<S>::Identity(n, n);
  VectorX<S> a(n);
  MatrixX<S> Mk = MatrixX<S>::Zero(n, n);
  S ck = 1;
  for (Index k = 1; k <= n; ++k) {
    Mk = Em * Mk + ck * I;
    ck = -(Em * Mk).trace() / static_cast<S>(k);
    a(n - k) = -ck;
  }

  std::vector<MatrixX<S>> powers(n + 1);
  powers[0] = I;
  for (Index k = 1; k <= n; ++k) powers[k] = Em * powers[k - 1];
  auto residual = [&](const VectorX<S>& coef) {
    MatrixX<S> combo = MatrixX<S>::Zero(n, n);
    for (Index k = 0; k < n; ++k) combo += coef(k) * powers[k];
    return (powers[n] - combo).norm() / std::max<S>(1, powers[n].norm());
  };
  if (residual(a) <= tol.residual_tol) return a;

  MatrixX<S> basis(n * n, n);
  for (Index k = 0; k < n; ++k) basis.col(k) = powers[k].reshaped();
  VectorX<S> refit = basis.colPivHouseholderQr().solve(VectorX<S>(powers[n].reshaped()));
  if (residual(refit) <= tol.residual_tol) return refit;
  throw NumericalFailure("char_poly_coeffs: Cayley-Hamilton residual above tolerance");
}

// Largest principal angle (radians) between the column spans of X and Y.
template <class DX, class DY>
typename DX::Scalar max_principal_angle(const Eigen::MatrixBase<DX>& X,
                                        const Eigen::MatrixBase<DY>& Y,
                                        const ToleranceConfig& tol = {}) {
  using S = typename DX::Scalar;
  const MatrixX<S> Qx = row_space_basis(X.transpose(), tol).transpose();
  const MatrixX<S> Qy = row_space_basis(Y.transpose(), tol).transpose();
  if (Qx.cols() != Qy.cols()) return static_cast<S>(M_PI / 2);
  if (Qx.cols() == 0) return 0;
  // Sines of the principal angles are the singular values of the part of Qy
  // outside span(Qx); this is accurate for small angles.
  const MatrixX<S> outside = Qy - Qx * (Qx.transpose() * Qy);
  Eigen::JacobiSVD<MatrixX<S>> svd(outside);
  const S s = std::min<S>(1, svd.singularValues()(0));
  return std::asin(s);
}

}  // namespace lqgtl
