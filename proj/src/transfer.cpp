#include "lqgtl/transfer.hpp"

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include <cmath>
#include <complex>
#include <limits>

namespace lqgtl {

namespace {

// Gain information carried by one source: the minimum-norm gain is exact on
// span(data_basis) and unconstrained along the rows of null_rows.
struct SourceGain {
  Matrix gain;        // m x d
  Matrix data_basis;  // d x r, orthonormal columns
  Matrix null_rows;   // (d-r) x d, orthonormal rows
};

SourceGain analyse_source(const SourceWindows& s, const ToleranceConfig& tol) {
  if (s.windows.cols() != s.next_inputs.cols() || s.windows.cols() == 0)
    throw DimensionError("source windows: column counts differ or are zero");
  require_finite(s.windows, "source windows");
  require_finite(s.next_inputs, "source inputs");
  Eigen::JacobiSVD<Matrix> svd(s.windows, Eigen::ComputeFullU);
  const Index r = detail::count_above(svd.singularValues(), tol.rank_tol);
  const Index d = s.windows.rows();
  SourceGain g;
  g.gain = s.next_inputs * pseudo_inverse(s.windows, tol);
  g.data_basis = svd.matrixU().leftCols(r);
  g.null_rows = svd.matrixU().rightCols(d - r).transpose();
  return g;
}

Matrix orthonormal_rows(const Matrix& L) {
  Eigen::HouseholderQR<Matrix> qr(L.transpose());
  return (qr.householderQ() * Matrix::Identity(L.cols(), L.rows())).transpose();
}

LearnedEstimator finish(const Matrix& rows, Index n, Index m, Index l, EstimatorMethod method,
                        const ToleranceConfig& tol) {
  LearnedEstimator est;
  est.n = n;
  est.m = m;
  est.l = l;
  est.method = method;
  est.L_hat = orthonormal_rows(rows);
  est.kernel_basis = nullspace_basis(est.L_hat, tol);
  return est;
}

double gain_scale(const std::vector<SourceGain>& gains) {
  double scale = 0;
  for (const auto& g : gains) scale += (g.gain * g.data_basis).squaredNorm();
  return std::max(scale, std::numeric_limits<double>::min());
}

// Squared misfit, summed over sources, between each source gain and the best
// gain of the form K * L on that source's data space.
double consistency(const std::vector<SourceGain>& gains, const Matrix& L) {
  double total = 0;
  for (const auto& g : gains) {
    const Matrix Z = g.gain * g.data_basis;
    const Matrix B = L * g.data_basis;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(B.transpose());
    const Matrix coef = cod.solve(Z.transpose());
    total += (Z - coef.transpose() * B).squaredNorm();
  }
  return total;
}

struct Dimensions {
  Index n, m, l, d;
};

Dimensions check_multi_inputs(const std::vector<SourceWindows>& sources, Index n, Index m) {
  if (n < 1 || m < 1) throw InvalidInput("multi-input learner: n and m must be positive");
  if (sources.empty()) throw InvalidInput("multi-input learner: no sources");
  const Index d = sources.front().windows.rows();
  if (d % n != 0 || d / n <= m) throw DimensionError("multi-input learner: window size mismatch");
  for (const auto& s : sources) {
    if (s.windows.rows() != d || s.next_inputs.rows() != m)
      throw DimensionError("multi-input learner: sources disagree on dimensions");
  }
  return {n, m, d / n - m, d};
}

// ---------------------------------------------------------------------------
// Structured refinement. The estimation matrix of a filter with state matrix E
// (characteristic coefficients a), input map F and output map G is
//   [ p_0(E)F ... p_{n-1}(E)F   p_0(E)G ... p_{n-1}(E)G ]
//   [ a (x) I_m                 0                       ]
// with p_{n-1} = I and p_{j-1}(E) = E p_j(E) - a_j I. In companion
// coordinates (last row of E equal to a, first column of G equal to e_n) the
// filter has n + nm + n(l-1) free parameters. The per-source feedback gains
// enter linearly and are eliminated by least squares.

Matrix structured_estimation(const Vector& theta, Index n, Index m, Index l) {
  const Vector a = theta.head(n);
  const Matrix F = theta.segment(n, n * m).reshaped(n, m);
  Matrix G = Matrix::Zero(n, l);
  G(n - 1, 0) = 1;
  if (l > 1) G.rightCols(l - 1) = theta.tail(n * (l - 1)).reshaped(n, l - 1);
  Matrix E = Matrix::Zero(n, n);
  E.topRightCorner(n - 1, n - 1).setIdentity();
  E.row(n - 1) = a.transpose();

  Matrix L = Matrix::Zero(n + m, n * (m + l));
  Matrix poly = Matrix::Identity(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    L.block(0, j * m, n, m) = poly * F;
    L.block(0, n * m + j * l, n, l) = poly * G;
    if (j > 0) poly = E * poly - a(j) * Matrix::Identity(n, n);
  }
  for (Index j = 0; j < n; ++j) L.block(n, j * m, m, m) = a(j) * Matrix::Identity(m, m);
  return L;
}

struct StructuredResidual {
  using Scalar = double;
  using InputType = Vector;
  using ValueType = Vector;
  using JacobianType = Matrix;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<SourceGain>* gains = nullptr;
  Index n = 0, m = 0, l = 0;
  Index value_count = 0;
  mutable long evaluations = 0;

  StructuredResidual() = default;
  StructuredResidual(const std::vector<SourceGain>* g, Index n_, Index m_, Index l_)
      : gains(g), n(n_), m(m_), l(l_) {
    for (const auto& s : *g) value_count += m * s.data_basis.cols();
  }
  int inputs() const { return static_cast<int>(n + n * m + n * (l - 1)); }
  int values() const { return static_cast<int>(value_count); }

  int operator()(const Vector& theta, Vector& out) const {
    ++evaluations;
    const Matrix L = structured_estimation(theta, n, m, l);
    out.resize(value_count);
    Index at = 0;
    for (const auto& s : *gains) {
      const Matrix Z = (s.gain - L.bottomRows(m)) * s.data_basis;
      const Matrix B = L.topRows(n) * s.data_basis;
      Eigen::HouseholderQR<Matrix> qr(B.transpose());
      const Matrix Q = qr.householderQ() * Matrix::Identity(B.cols(), std::min(B.rows(), B.cols()));
      const Matrix r = Z - (Z * Q) * Q.transpose();
      out.segment(at, r.size()) = r.reshaped();
      at += r.size();
    }
    return 0;
  }
};

// Characteristic coefficients (E^n = sum a_k E^k) of a random monic
// polynomial whose roots lie in the unit disk.
Vector random_stable_charpoly(Index n, NormalGenerator& rng) {
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n + 1);  // ascending powers
  coeff(0) = 1;
  Index degree = 0;
  auto multiply = [&](std::complex<double> root) {
    for (Index k = degree + 1; k > 0; --k) coeff(k) = coeff(k - 1) - root * coeff(k);
    coeff(0) = -root * coeff(0);
    ++degree;
  };
  while (degree < n) {
    if (n - degree >= 2 && rng.uniform() < 0.5) {
      const double radius = std::sqrt(rng.uniform());
      const std::complex<double> root = std::polar(radius, M_PI * rng.uniform());
      multiply(root);
      multiply(std::conj(root));
    } else {
      multiply({2.0 * rng.uniform() - 1.0, 0.0});
    }
  }
  Vector a(n);
  for (Index k = 0; k < n; ++k) a(k) = -coeff(k).real();
  return a;
}

struct RefineOutcome {
  Matrix L;
  Vector params;
  double objective = std::numeric_limits<double>::infinity();  // relative
  long starts = 0;
  long evaluations = 0;
};

RefineOutcome refine_structured(const std::vector<SourceGain>& gains, const Dimensions& dim,
                                const MultiInputOptions& opts, std::uint64_t stream) {
  RefineOutcome best;
  const double scale = gain_scale(gains);
  NormalGenerator rng(opts.seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  StructuredResidual residual(&gains, dim.n, dim.m, dim.l);
  const Index params = residual.inputs();
  if (residual.values() < params) return best;

  for (int s = 0; s < opts.refine_starts; ++s) {
    Vector theta(params);
    if (s == 0 && opts.warm_start.size() == params) {
      theta = opts.warm_start;
    } else {
      theta.head(dim.n) = random_stable_charpoly(dim.n, rng);
      theta.tail(params - dim.n) = rng.vector(params - dim.n);
    }

    Eigen::NumericalDiff<StructuredResidual, Eigen::Forward> diff(residual);
    Eigen::LevenbergMarquardt<decltype(diff)> lm(diff);
    lm.parameters.maxfev = static_cast<Index>(opts.refine_max_evaluations);
    lm.parameters.ftol = 1e-15;
    lm.parameters.xtol = 1e-15;
    lm.parameters.gtol = 0;
    // Starts that reach the exact fit do so quickly; a start still far from
    // it after a fixed number of steps is abandoned.
    constexpr int kProbeStep = 60;
    constexpr double kProbeObjective = 1e-9;
    if (lm.minimizeInit(theta) != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
      int step = 0;
      while (lm.minimizeOneStep(theta) == Eigen::LevenbergMarquardtSpace::Running) {
        if (++step == kProbeStep && lm.fvec.squaredNorm() / scale > kProbeObjective) break;
      }
    }
    best.evaluations += diff.evaluations;

    ++best.starts;
    if (!theta.allFinite()) continue;
    Vector r;
    residual(theta, r);
    const double objective = r.squaredNorm() / scale;
    if (objective < best.objective) {
      best.objective = objective;
      best.params = theta;
      best.L = structured_estimation(theta, dim.n, dim.m, dim.l);
    }
    if (best.objective <= opts.refine_accept) break;
  }
  return best;
}

// Replaces the primary estimate by the structured one when the primary
// algorithm did not reach an exact fit and the refinement fits better.
LearnedEstimator maybe_refine(LearnedEstimator est, const std::vector<SourceGain>& gains,
                              const Dimensions& dim, const MultiInputOptions& opts,
                              std::uint64_t stream) {
  const double scale = gain_scale(gains);
  est.diagnostics.consistency = consistency(gains, est.L_hat);
  // With at most n + m stacked gain rows any estimate spanning them fits
  // exactly, so an exact primary fit carries no information.
  const bool vacuous = static_cast<Index>(gains.size()) * dim.m <= dim.n + dim.m;
  if (!opts.refine) return est;
  if (!vacuous && est.diagnostics.consistency / scale <= opts.refine_accept) return est;
  const RefineOutcome ref = refine_structured(gains, dim, opts, stream);
  est.diagnostics.refine_starts = ref.starts;
  est.diagnostics.refine_evaluations = ref.evaluations;
  est.diagnostics.refine_objective = ref.objective;
  if (ref.L.size() == 0) return est;
  const double ref_consistency = consistency(gains, orthonormal_rows(ref.L));
  if (vacuous || ref_consistency < est.diagnostics.consistency) {
    const EstimatorDiagnostics keep = est.diagnostics;
    est = finish(ref.L, dim.n, dim.m, dim.l, est.method, opts.rank);
    est.diagnostics = keep;
    est.diagnostics.refined = true;
    est.structured_params = ref.params;
    est.diagnostics.consistency = ref_consistency;
  }
  return est;
}

std::vector<SourceWindows> windows_of(const std::vector<SourceDataset>& datasets, Index n) {
  std::vector<SourceWindows> out;
  out.reserve(datasets.size());
  for (const auto& ds : datasets) out.push_back(source_windows(ds.traj, n));
  return out;
}

}  // namespace

std::string to_string(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::SingleInputKernel: return "single-input-kernel";
    case EstimatorMethod::MultiKernelCorrection: return "multi-kernel-correction";
    case EstimatorMethod::BilinearAls: return "bilinear-als";
  }
  return "unknown";
}

EstimatorMethod estimator_method_from_string(const std::string& tag) {
  if (tag == "single-input-kernel") return EstimatorMethod::SingleInputKernel;
  if (tag == "multi-kernel-correction") return EstimatorMethod::MultiKernelCorrection;
  if (tag == "bilinear-als") return EstimatorMethod::BilinearAls;
  throw InvalidInput("unknown estimator method '" + tag + "'");
}

SourceWindows source_windows(const Trajectory& traj, Index n) {
  traj.validate();
  if (n < 1) throw InvalidInput("source_windows: n must be positive");
  if (traj.length() < n)
    throw InsufficientData("source_windows: trajectory shorter than one window",
                           static_cast<long>(n));
  const DataMatrixPair pair = build_pair(traj, n, traj.length() - n + 1);
  return {pair.windows, pair.next_inputs};
}

LearnedEstimator learn_lest_single_input(std::vector<SourceDataset>& datasets, Index n,
                                         const ToleranceConfig& tol) {
  if (datasets.empty()) throw InvalidInput("learn_lest_single_input: no source datasets");
  const Index m = datasets.front().traj.m();
  const Index l = datasets.front().traj.l();
  if (m != 1) throw InvalidInput("learn_lest_single_input: needs single-input data");
  const long required = imitation_length(n, l);
  std::vector<Matrix> gains;
  for (auto& ds : datasets) {
    if (ds.traj.m() != m || ds.traj.l() != l)
      throw DimensionError("learn_lest_single_input: datasets disagree on dimensions");
    if (ds.traj.length() < required)
      throw InsufficientData("learn_lest_single_input: source '" + ds.label + "' too short",
                             required);
    if (!ds.learned_gain) ds.learned_gain = learn_klqg(ds.traj, n, tol);
    gains.push_back(ds.learned_gain->K);
  }
  const Matrix kernel = intersect_kernels(gains, tol);
  const Index expected = n * (m + l) - (n + m);
  if (kernel.cols() != expected)
    throw DiversityViolation("learn_lest_single_input: sources are not diverse enough",
                             static_cast<long>(kernel.cols()), static_cast<long>(expected));
  LearnedEstimator est;
  est.n = n;
  est.m = m;
  est.l = l;
  est.method = EstimatorMethod::SingleInputKernel;
  est.kernel_basis = kernel;
  est.L_hat = orth_complement_basis(kernel, tol);
  est.diagnostics.iterations = 0;
  est.diagnostics.starts = 0;
  return est;
}

bool check_assumption2(const std::vector<Matrix>& gains, const ToleranceConfig& tol) {
  if (gains.empty()) return false;
  const Index cols = gains.front().cols();
  Index rows = 0;
  for (const auto& K : gains) {
    if (K.cols() != cols) throw DimensionError("check_assumption2: column counts differ");
    rows += K.rows();
  }
  Matrix stack(rows, cols);
  Index at = 0;
  for (const auto& K : gains) {
    stack.middleRows(at, K.rows()) = K;
    at += K.rows();
  }
  return numerical_rank(stack, tol) == cols;
}

bool check_persistency(const Matrix& L, const Matrix& windows, const ToleranceConfig& tol) {
  if (L.cols() != windows.rows()) throw DimensionError("check_persistency: shapes differ");
  if (windows.norm() == 0) return true;
  // Absolute threshold: a window inside Ker(L) must map to (numerically) zero,
  // which a rank relative to the image's own scale would not detect.
  const Eigen::JacobiSVD<Matrix> svd(L * windows);
  const auto largest = [](const Matrix& M) { return Eigen::JacobiSVD<Matrix>(M).singularValues()(0); };
  const double floor = tol.rank_tol * largest(L) * largest(windows);
  const Index mapped = (svd.singularValues().array() > floor).count();
  return mapped == numerical_rank(windows, tol);
}

TargetResult learn_target_gain(const LearnedEstimator& est, const Trajectory& target, Index n,
                               const ToleranceConfig& tol) {
  target.validate();
  const Index m = target.m();
  if (est.L_hat.rows() != n + m || est.L_hat.cols() != n * (m + target.l()))
    throw DimensionError("learn_target_gain: estimator does not match the target dimensions");
  const long required = transfer_length(n, m);
  if (target.length() < required)
    throw InsufficientData("learn_target_gain: target trajectory too short", required);
  const Index c = target.length() - n + 1;
  const DataMatrixPair pair = build_pair(target, n, c);
  const Matrix LH = est.L_hat * pair.windows;
  if (numerical_rank(LH, tol) < n + m)
    throw PersistencyFailure("learn_target_gain: target windows do not excite the estimation matrix");

  TargetResult out;
  if (c == n + m) {
    Eigen::FullPivLU<Matrix> lu(LH.transpose());
    lu.setThreshold(tol.rank_tol);
    if (!lu.isInvertible()) throw NumericalFailure("learn_target_gain: singular window image");
    out.K_hat = lu.solve(pair.next_inputs.transpose()).transpose();
  } else {
    out.K_hat = pair.next_inputs * pseudo_inverse(LH, tol);
  }
  out.K_target = out.K_hat * est.L_hat;
  out.residual = (pair.next_inputs - out.K_hat * LH).norm() / std::max(1.0, pair.next_inputs.norm());
  out.trajectory_length_used = target.length();
  return out;
}

LearnedEstimator learn_lest_multi_kernel(const std::vector<SourceWindows>& sources, Index n,
                                         Index m, const MultiInputOptions& opts) {
  const Dimensions dim = check_multi_inputs(sources, n, m);
  std::vector<SourceGain> gains;
  for (const auto& s : sources) gains.push_back(analyse_source(s, opts.rank));

  const Index N = static_cast<Index>(gains.size());
  const Index rank = n + m;
  Matrix stack(N * m, dim.d);
  for (Index i = 0; i < N; ++i) stack.middleRows(i * m, m) = gains[i].gain;

  long it = 0;
  bool converged = false;
  double tail = 0;
  Matrix rows;
  for (;;) {
    // Full V so that fewer than n + m stacked rows still give n + m rows.
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    rows = svd.matrixV().leftCols(rank).transpose();
    tail = sv.size() > rank && sv(0) > 0 ? sv(rank) / sv(0) : 0.0;
    if (tail <= opts.tol) {
      converged = true;
      break;
    }
    if (it >= opts.max_iter) break;
    ++it;
    const Matrix low = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal() * rows;
    // Closest point of each block's affine set {gain + X * null_rows}.
    for (Index i = 0; i < N; ++i) {
      const auto& g = gains[i];
      Matrix block = g.gain;
      if (g.null_rows.rows() > 0) {
        const Matrix X = (low.middleRows(i * m, m) - g.gain) * g.null_rows.transpose();
        block += X * g.null_rows;
      }
      stack.middleRows(i * m, m) = block;
    }
  }

  LearnedEstimator est = finish(rows, n, m, dim.l, EstimatorMethod::MultiKernelCorrection, opts.rank);
  est.diagnostics.iterations = it;
  est.diagnostics.objective = tail;
  est.diagnostics.converged = converged;
  est.diagnostics.starts = 1;
  return maybe_refine(std::move(est), gains, dim, opts, 0);
}

LearnedEstimator learn_lest_multi_bilinear(const std::vector<SourceWindows>& sources, Index n,
                                           Index m, const MultiInputOptions& opts) {
  const Dimensions dim = check_multi_inputs(sources, n, m);
  std::vector<SourceGain> gains;
  for (const auto& s : sources) gains.push_back(analyse_source(s, opts.rank));
  const Index rank = n + m;
  const Index d = dim.d;

  double scale = 0;
  Index rows = 0;
  for (const auto& s : sources) {
    scale += s.next_inputs.squaredNorm();
    rows += s.next_inputs.size();
  }
  scale = std::max(scale, std::numeric_limits<double>::min());

  Matrix best_rows;
  double best_objective = std::numeric_limits<double>::infinity();
  long best_iterations = 0;
  bool best_converged = false;
  const int starts = std::max(1, opts.starts);
  for (int start = 0; start < starts; ++start) {
    NormalGenerator rng(opts.seed * 1000003ULL + static_cast<std::uint64_t>(start));
    Matrix L = orthonormal_rows(rng.vector(rank * d).reshaped(rank, d));
    double previous = std::numeric_limits<double>::infinity();
    double objective = previous;
    long it = 0;
    bool converged = false;
    std::vector<Matrix> K(sources.size());
    for (;;) {
      objective = 0;
      for (std::size_t i = 0; i < sources.size(); ++i) {
        const Matrix LH = L * sources[i].windows;
        K[i] = sources[i].next_inputs * pseudo_inverse(LH, opts.rank);
        objective += (sources[i].next_inputs - K[i] * LH).squaredNorm();
      }
      if (previous - objective <= opts.tol * scale) {
        converged = true;
        break;
      }
      if (it >= opts.max_iter) break;
      previous = objective;
      ++it;
      // Stacked vectorized least squares in L, solved without forming the
      // normal equations so that ill-conditioned sources keep their accuracy.
      Matrix design(rows, rank * d);
      Vector target(rows);
      Index at = 0;
      for (std::size_t i = 0; i < sources.size(); ++i) {
        const Index block = sources[i].next_inputs.size();
        design.middleRows(at, block) = kron(Matrix(sources[i].windows.transpose()), K[i]);
        target.segment(at, block) = vec(sources[i].next_inputs);
        at += block;
      }
      const Vector solution = design.completeOrthogonalDecomposition().solve(target);
      L = orthonormal_rows(solution.reshaped(rank, d));
    }
    if (objective < best_objective) {
      best_objective = objective;
      best_rows = L;
      best_iterations = it;
      best_converged = converged;
    }
  }

  LearnedEstimator est = finish(best_rows, n, m, dim.l, EstimatorMethod::BilinearAls, opts.rank);
  est.diagnostics.iterations = best_iterations;
  est.diagnostics.objective = best_objective;
  est.diagnostics.converged = best_converged;
  est.diagnostics.starts = starts;
  return maybe_refine(std::move(est), gains, dim, opts, 1);
}

LearnedEstimator learn_lest_multi_kernel(const std::vector<SourceDataset>& datasets, Index n,
                                         Index m, const MultiInputOptions& opts) {
  return learn_lest_multi_kernel(windows_of(datasets, n), n, m, opts);
}

LearnedEstimator learn_lest_multi_bilinear(const std::vector<SourceDataset>& datasets, Index n,
                                           Index m, const MultiInputOptions& opts) {
  return learn_lest_multi_bilinear(windows_of(datasets, n), n, m, opts);
}

double subspace_error(const Matrix& K_target, const Matrix& L_hat) {
  if (K_target.cols() != L_hat.cols()) throw DimensionError("subspace_error: shapes differ");
  const Matrix projector = pseudo_inverse(L_hat) * L_hat;
  const Matrix outside = K_target - K_target * projector;
  if (outside.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(outside);
  return svd.singularValues()(0);
}

double subspace_error(const Matrix& K_target, const LearnedEstimator& est) {
  return subspace_error(K_target, est.L_hat);
}

}  // namespace lqgtl
