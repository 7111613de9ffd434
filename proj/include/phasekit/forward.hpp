#pragma once

#include "phasekit/signal.hpp"

#include <cstdint>
#include <variant>
#include <vector>

namespace phasekit {

// Forward measurement models and observation corruption.

/// M-point (per axis) Fourier magnitude-squared measurements, M >= N.
struct OversampledFourier {
  Shape grid;  // measurement grid extents
};

/// y_k = |<a_k, x>|^2 with explicit measurement vectors a_k as rows.
struct GeneralLinear {
  CMatrix vectors;  // M x N, row k holds a_k
};

/// Fourier magnitudes through an ideal low-pass filter: bins with
/// |frequency| > cutoff (cycles per sample) are zeroed before |.|^2.
struct LowPassFourier {
  Shape grid;
  double cutoff = 0.5;
};

/// |field|^2 sampled at one or more propagation planes, concatenated.
struct MultiPlane {
  std::vector<double> distances;  // meters
  double wavelength = 0.0;        // meters
  double sampleSpacing = 0.0;     // meters
};

using MeasurementModel = std::variant<OversampledFourier, GeneralLinear, LowPassFourier, MultiPlane>;

/// Validates model invariants against a signal shape; throws on violation.
void validate_model(const MeasurementModel& model, const Shape& signalShape);

enum class NoiseKind { None, Poisson };

struct NoiseMeta {
  NoiseKind kind = NoiseKind::None;
  double photonBudget = 0.0;  // expected total detected photons
};

/// Nonnegative measurement vector with a per-entry validity mask.
struct Observation {
  RVector y;
  BoolArray valid;
  NoiseMeta noise;
  std::vector<Index> dims;  // natural layout of y (product == y.size())

  Index count() const { return y.size(); }
};

struct PropagationConfig {
  double wavelength = 0.0;    // m
  double distance = 0.0;      // m, >= 0
  double sampleSpacing = 0.0; // m
  double objectRadius = 0.0;  // m, optional (0 = unset)

  /// a^2 / (lambda z); computed on demand.
  double fresnel_number() const;
};

/// X[k] = sum_{n<N} x[n] e^{-j 2 pi k n / M} for k = 0..M-1 (2D per axis).
Signal oversampled_dft(const Signal& x, const Shape& grid);
Signal oversampled_dft(const Signal& x, Index m);  // 1D convenience

/// g[m] = sum_i x^_i conj(x^_{i-m}), m = -(N-1)..N-1, of the zero-padded
/// vector; returned in ascending-m order (index m + N - 1).
CVector autocorrelation(const Signal& x);

/// Noise-free intensity observation under the given model (full mask).
Observation intensity(const Signal& x, const MeasurementModel& model);

/// Angular-spectrum free-space propagation over distance cfg.distance.
/// Evanescent components take the decaying branch; distance 0 is exact
/// identity.
Signal propagate(const Signal& field, const PropagationConfig& cfg);

/// Rescales y so its total equals photonBudget, replaces each entry by a
/// Poisson draw with that mean, and scales back. Deterministic per seed.
Observation add_poisson_noise(const Observation& obs, double photonBudget, std::uint64_t seed);

/// Marks entries within L-inf distance `radius` of the zero-frequency sample
/// invalid (beamstop); radius 0 is a no-op.
Observation apply_missing_center(const Observation& obs, Index radius);

}  // namespace phasekit
