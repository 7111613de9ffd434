#pragma once

#include "phasekit/forward.hpp"
#include "phasekit/signal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phasekit {

// Alternating-projection solvers. Iterates live on the full measurement
// grid; a support mask of smaller shape is embedded at the origin and
// everything outside it counts as off-support.

enum class FienupVariant { ER, HIO, IO, OO };

FienupVariant parse_fienup_variant(const std::string& name);

struct RealSpaceConstraint {
  std::optional<SupportMask> support;
  bool nonnegative = false;
  bool realValued = false;
  std::optional<Signal> knownMagnitude;  // GS mode

  void validate() const;
};

struct AltProjConfig {
  double beta = 0.9;
  Index maxIters = 1000;
  double epsilon = 0.0;       // stop when E_i <= epsilon
  int ossStages = 10;
  // Gaussian filter width in frequency samples, interpolated linearly across
  // the stages; (0, 0) means the default 2M down to M/10. Infinities force
  // the identity filter.
  std::pair<double, double> ossAlphaRange{0.0, 0.0};
  std::uint64_t seed = 0;
  std::optional<Signal> initialGuess;  // overrides the random-phase start

  void validate() const;
};

struct IterateTrace {
  std::vector<double> errors;  // E_i per iteration
  Signal reconstruction;
  Index iterations = 0;
  bool converged = false;
};

/// Writes the trace as CSV rows "iter,E".
void write_trace_csv(const std::string& path, const IterateTrace& trace);

/// Per-sample constraint violation set for the Fienup correction. Membership:
/// off-support samples with nonzero modulus, nonreal samples where realness
/// is demanded, negative real parts where nonnegativity is demanded.
BoolArray violation_set(const Signal& estimate, const RealSpaceConstraint& constraint);

/// One real-space correction step (ER / HIO / IO / OO).
Signal fienup_step(const Signal& current, const Signal& estimate,
                   const RealSpaceConstraint& constraint, FienupVariant variant, double beta);

/// Classic two-magnitude alternating projection; the error
/// E_i = sum_k (|Z_i[k]| - |X[k]|)^2 is monotonically nonincreasing.
IterateTrace gs_solve(const Observation& obs, const Signal& knownMagnitude, const AltProjConfig& cfg);

/// Fienup iteration with the chosen correction variant.
IterateTrace fienup_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                          const AltProjConfig& cfg, FienupVariant variant);

IterateTrace hio_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                       const AltProjConfig& cfg);

/// HIO with a stage-scheduled Gaussian spectral filter applied to the
/// off-support region; returns the lowest-error iterate of the run.
IterateTrace oss_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                       const AltProjConfig& cfg);

/// Support refinement: samples where the Gaussian-smoothed magnitude is at
/// least thresholdFrac of its maximum.
SupportMask shrinkwrap_update(const Signal& current, double smoothingWidth, double thresholdFrac);

}  // namespace phasekit
