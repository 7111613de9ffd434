#pragma once

#include "phasekit/altproj.hpp"
#include "phasekit/forward.hpp"
#include "phasekit/signal.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace phasekit {

// Sparsity-exploiting solvers over real symmetric quadratic systems
// y_i = x^T A_i x. Fourier-magnitude systems use an implicit FFT-backed
// representation of A_k = Re(a_k a_k*); anything else stores the matrices.

class QuadraticSystem {
 public:
  /// Dense system from explicit symmetric matrices.
  QuadraticSystem(std::vector<RMatrix> matrices, RVector y);

  /// Implicit system for y_k = |M-point DFT(x)[k]|^2 over the measurement
  /// bins in `bins` (for real x only bins 0..M/2 carry unique magnitudes).
  static QuadraticSystem fourier(Index n, Index m, RVector y, std::vector<Index> bins);

  Index dim() const { return n_; }
  Index measurements() const { return y_.size(); }
  const RVector& y() const { return y_; }
  bool is_fourier() const { return fourierM_ > 0; }
  Index fourier_m() const { return fourierM_; }
  const std::vector<Index>& fourier_bins() const { return bins_; }
  const std::vector<RMatrix>& matrices() const { return mats_; }

  RVector quad_forms(const RVector& x) const;          // q_i = x^T A_i x
  double objective(const RVector& x) const;            // sum (q_i - y_i)^2
  RVector gradient(const RVector& x) const;            // 4 sum (q_i - y_i) A_i x

  /// Residuals and Jacobian of the support-restricted residual map
  /// r_i(z) = z^T (A_i)_SS z - y_i; J(i,j) = 2 (A_i x)_{S_j}.
  void restricted(const std::vector<Index>& support, const RVector& z, RVector& r, RMatrix& J) const;

 private:
  QuadraticSystem() = default;
  Index n_ = 0;
  RVector y_;
  std::vector<RMatrix> mats_;   // dense backend
  Index fourierM_ = 0;          // fourier backend
  std::vector<Index> bins_;
  CVector dft_bins(const RVector& x) const;
};

/// (f, grad f) of the quadratic least-squares objective.
std::pair<double, RVector> objective_and_gradient(const RVector& x, const QuadraticSystem& sys);

struct GesparConfig {
  Index sparsity = 1;
  double tau = 1e-12;        // objective threshold
  Index maxSwaps = 6400;     // total attempted swaps across restarts
  Index maxRestarts = 100000;
  Index gnMaxIters = 100;
  double gnDampingInit = 1.0;
  double gnTolerance = 1e-12;
  std::uint64_t seed = 0;
  // Optional structural knowledge: indices that stay in every support, and a
  // restricted candidate pool (empty pool = all indices). Fourier systems
  // get both from fourier_support_hints.
  std::vector<Index> pinnedIndices;
  std::vector<Index> candidatePool;

  void validate(Index n) const;
};

struct FourierSupportHints {
  Index extent = 0;                 // max nonzero lag of the autocorrelation
  std::vector<Index> candidatePool; // indices in [0, extent] at observed lags
  std::vector<Index> pinnedIndices; // {0, extent}
};

/// Support hints for circular-Fourier magnitude systems, read off the
/// measured autocorrelation (inverse DFT of the full intensity vector).
/// Shift ambiguity guarantees a solution whose first nonzero sits at 0 and
/// whose last sits at the autocorrelation extent; every other support index
/// must appear among the nonzero lags. Reliable for noise-free data.
FourierSupportHints fourier_support_hints(const RVector& intensityFullGrid, Index m, Index n,
                                          double relTol = 1e-8);

struct GaussNewtonResult {
  RVector z;          // restricted solution, |support| entries
  double objective = 0.0;
  Index iterations = 0;
};

/// Damped Gauss-Newton restricted to the given support; the objective is
/// nonincreasing across accepted steps (step halving until decrease).
GaussNewtonResult damped_gauss_newton(const QuadraticSystem& sys, const std::vector<Index>& support,
                                      const GesparConfig& cfg,
                                      const std::optional<RVector>& init = std::nullopt);

struct GesparReport {
  double objective = 0.0;
  Index swaps = 0;
  Index restarts = 0;
  bool reachedTau = false;
  std::vector<double> acceptedObjectives;  // per accepted swap, within restarts
};

/// 2-opt local search over supports: swap the smallest in-support |x| against
/// the largest off-support |grad f|, trying ranked fallback pairs, restarting
/// with a fresh random support when no swap improves.
std::pair<Signal, GesparReport> gespar_solve(const QuadraticSystem& sys, const GesparConfig& cfg);

struct Dictionary {
  CMatrix atoms;  // N x D, one atom per column
  struct AtomMeta {
    double cx = 0, cy = 0, diameter = 0;
  };
  std::vector<AtomMeta> meta;  // optional, one per atom
  Shape signalShape;           // shape of the signals atoms represent

  static Dictionary identity(Index n);
  void validate() const;
};

struct SparseFienupReport {
  std::vector<double> errors;
  Index iterations = 0;
  bool converged = false;
  double finalObjective = 0.0;  // sum (|Z_k|^2 - y_k)^2 over valid bins
};

/// Fienup iteration whose real-space step projects onto the dictionary,
/// keeps the k largest coefficients, and projects back. Non-square
/// dictionaries use a least-squares projection; `useOmp` switches the
/// analysis step to OMP.
std::pair<Signal, SparseFienupReport> sparse_fienup_solve(const Observation& obs, const Dictionary& dict,
                                                          Index k, const AltProjConfig& cfg,
                                                          bool useOmp = false);

struct OmpResult {
  CVector code;                 // length D, k nonzeros
  std::vector<Index> support;
  double residualNorm = 0.0;
};

/// Orthogonal matching pursuit: k greedy selections by maximal normalized
/// correlation with the residual, least-squares refit each step.
OmpResult omp_solve(const Signal& target, const Dictionary& dict, Index k);

/// Builds the real quadratic system matching intensity measurements of the
/// model. Real signals use A_k = Re(a_k a_k*); complex signals are handled by
/// stacking real and imaginary parts into 2N real unknowns.
QuadraticSystem quadratic_system_from(const MeasurementModel& model, const Observation& obs,
                                      bool realSignal = true);

}  // namespace phasekit
