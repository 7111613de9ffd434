#pragma once

#include "phasekit/signal.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phasekit {

// Reconstruction-quality metrics and uniqueness/conditioning diagnostics.

struct MetricReport {
  double E = 0.0;
  double R_F = 0.0;
  double zeta = 1.0;
  RVector prtf;                  // per-frequency, empty when not computed
  double alignedResidual = 0.0;

  std::string to_json() const;   // flat object of the scalar fields
};

void write_prtf_csv(const std::string& path, const RVector& prtf);

/// E = sum |z_r - z_m| / sum |z_m|. Callers align the reconstruction to the
/// model via align_to_reference first.
double recovery_error_E(const Signal& reconstruction, const Signal& model);

/// R_F = sum ||Z_e| - zeta |Z_r|| / sum |Z_e| with zeta the L1-optimal scale
/// (weighted median of the magnitude ratios).
std::pair<double, double> r_factor(const RVector& measuredMag, const RVector& reconMag);

/// PRTF[k] = |mean_i Z_i[k]| / measuredMag[k] on the measurement grid, zero
/// where the measured magnitude vanishes, clipped to at most 1.
/// Reconstructions must be pre-aligned; ensembles whose members do not
/// pairwise align within residual 0.5 are refused.
RVector prtf(const std::vector<Signal>& reconstructions, const Signal& measuredMag);

/// Maximum absolute normalized inner product between distinct columns.
double coherence_mu(const CMatrix& a);
double coherence_mu(const RMatrix& a);

/// Worst k-column restricted-isometry constant of the column-normalized
/// matrix; exhaustive over all k-subsets (guarded: k <= 12, C(cols,k) <= 1e6).
double rip_delta(const RMatrix& a, Index k);

struct ComplementCheck {
  bool holds = false;
  std::vector<Index> witness;  // subset with neither side spanning
};

/// Complement property of measurement vectors (rows of `vectors`):
/// every subset or its complement spans R^N. Guarded to M <= 20.
ComplementCheck complement_property_check(const RMatrix& vectors);

struct CollisionCheck {
  bool collisionFree = false;
  std::array<Index, 4> witness{-1, -1, -1, -1};  // locations (i, j, k, l)
};

/// No two distinct pairs of nonzero locations share the same difference;
/// exhaustive over location quadruples (guarded to k^4 <= 1e8).
CollisionCheck collision_free_check(const Signal& x);

/// The classic pair of distinct real vectors sharing an autocorrelation
/// (and thus oversampled Fourier magnitude).
Signal counterexample_u();
Signal counterexample_v();

}  // namespace phasekit
