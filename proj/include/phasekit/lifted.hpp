#pragma once

#include "phasekit/forward.hpp"
#include "phasekit/signal.hpp"

#include <cstdint>

namespace phasekit {

// Matrix-lifting solvers. The measured intensities y_k = |<a_k, x>|^2 are
// linear in the lifted variable X = x x*: y_k = Tr(A_k X) with A_k = a_k a_k*.
// The convex programs are solved by a monotone accelerated proximal-gradient
// scheme: penalty gradient steps on the measurement slack plus trace/l1
// shrinkage, followed by projection onto the PSD cone by eigenvalue clipping.

struct LiftedConfig {
  double epsilonNoise = 0.0;  // measurement slack
  double lambda = 0.0;        // CPRL elementwise l1 weight
  double eta = 0.0;           // QCS row-sparsity budget (l1 of row l2 norms)
  double logDetDelta = 0.0;   // QCS reweighting regularizer; 0 = auto
  int outerIters = 15;        // QCS reweighting loop
  int innerIters = 2000;      // proximal-gradient iterations per solve
  double threshold = 0.02;    // QCS row hard-threshold fraction
  std::uint64_t seed = 0;

  double traceWeight = 0.0;   // trace-term weight; 0 = auto from data scale
  double objectiveTol = 1e-8; // outer objective-change stopping tolerance

  void validate() const;
};

template <typename Mat>
struct LiftedResultT {
  Mat X;
  bool feasible = false;   // measurement slack satisfied at the last iterate
  double penalty = 0.0;    // final max constraint violation beyond epsilon
  Index iterations = 0;
};

using LiftedResult = LiftedResultT<CMatrix>;
using LiftedResultReal = LiftedResultT<RMatrix>;

/// X = x x*; rank one with Tr(X) = ||x||^2.
CMatrix lift(const Signal& x);

/// Tr(A_k X) for every measurement vector (rows of `vectors`).
RVector trace_measurements(const CMatrix& vectors, const CMatrix& X);
RVector trace_measurements(const RMatrix& vectors, const RMatrix& X);

/// Trace-minimization relaxation subject to |Tr(A_k X) - y_k| <= epsilon and
/// X PSD.
LiftedResult phaselift_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg);
LiftedResultReal phaselift_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg);

/// Trace + lambda * elementwise l1; with lambda = 0 this is exactly
/// phaselift_solve.
LiftedResult cprl_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg);
LiftedResultReal cprl_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg);

/// Reweighted log-det rank surrogate with a mixed l1-2 row-norm budget and a
/// per-outer-iteration row hard threshold. The first outer iteration uses
/// W = I; later ones W = (X + delta I)^{-1}.
LiftedResult qcs_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg);
LiftedResultReal qcs_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg);

/// Leading-eigenpair rank-1 extraction: sqrt(s1) u1 where s1 u1 u1* is the
/// best rank-1 approximation of the (Hermitian PSD) input.
Signal extract_rank1(const CMatrix& X);
Signal extract_rank1(const RMatrix& X);

}  // namespace phasekit
