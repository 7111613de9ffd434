#pragma once

#include "phasekit/greedy.hpp"
#include "phasekit/signal.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phasekit {

// Scene generators and the Monte-Carlo experiment runner.

/// Real 1D vector with exactly k nonzeros at uniform positions, magnitudes
/// uniform on [3,4] with fair-coin signs.
Signal gen_sparse_vector(Index n, Index k, std::uint64_t seed);

struct CircleScene {
  Signal image;      // 2D
  Dictionary dict;   // one disc atom per grid point
  CVector code;      // s-sparse positive coefficients
};

/// Sparse-circle scene: gridPoints x gridPoints disc atoms of the given
/// diameter tiling an imageSize x imageSize image, with s active circles.
CircleScene gen_circle_image(Index gridPoints, Index imageSize, Index circleDiameter, Index s,
                             std::uint64_t seed);

/// Compact nonnegative blob with a bright rim and internal granules on a
/// support smaller than size/2 per axis.
Signal gen_phantom(Index size, std::uint64_t seed);

struct SceneSpec {
  std::string kind;       // "sparse1d" | "phantom2d" | "circles"
  Index n = 64;           // sparse1d length / phantom2d size
  std::vector<Index> sparsity{5};  // sweep points (sparse scenes)
  Index gridPoints = 15;  // circles
  Index imageSize = 195;
  Index circleDiameter = 13;
};

struct ModelSpec {
  std::string kind = "oversampledFourier";  // | "generalLinearGaussian" | "lowPassFourier"
  Index m = 128;            // measurement grid per axis / vector count
  bool complexVectors = true;
  double cutoff = 0.5;
};

struct NoiseSpec {
  std::string kind = "none";  // | "poisson"
  double photonBudget = 0.0;
  Index missingCenter = 0;
};

struct SolverSpec {
  std::string id;  // gespar | sparse-fienup | hio | oss | er | gs | phaselift | cprl | qcs
  Index restarts = 1;       // best-of restarts (sparse-fienup protocol)
  Index maxIters = 0;       // 0 = solver default
  double beta = 0.9;
  Index maxSwaps = 38400;
  double tauScale = 1e-4;   // gespar tau = tauScale * sum y_i^2
  Index supportDilation = 2;  // phantom scenes
  double lambda = 0.0;      // cprl
  double etaScale = 1.5;    // qcs eta = etaScale * true row-norm sum
  Index innerIters = 0;     // lifted solvers; 0 = default
};

struct SuccessSpec {
  double residualThreshold = 1e-4;
  bool requireSupportMatch = false;  // sparse scenes
};

struct ExperimentSpec {
  std::string name = "experiment";
  SceneSpec scene;
  ModelSpec model;
  NoiseSpec noise;
  std::vector<SolverSpec> solvers;
  Index trials = 100;
  std::uint64_t baseSeed = 1;
  SuccessSpec success;

  void validate() const;
  static ExperimentSpec from_json_file(const std::string& path);
  static ExperimentSpec from_json_text(const std::string& text);
};

struct TrialReport {
  std::string solverId;
  Index sweepKey = 0;  // sparsity (sparse scenes) or 0
  Index trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double alignedResidual = 0.0;
  double E = 0.0;
  double R_F = 0.0;
  double wallTimeSec = 0.0;
  Index iterations = 0;
  bool solverFailure = false;
};

struct SummaryRow {
  std::string solverId;
  Index sweepKey = 0;
  Index trials = 0;
  Index successes = 0;
  double rate = 0.0;
  double ciLo = 0.0;
  double ciHi = 0.0;
};

struct ExperimentResult {
  std::vector<TrialReport> trials;
  std::vector<SummaryRow> summary;
};

/// 95% Wilson score interval.
std::pair<double, double> wilson_interval(Index successes, Index trials);

/// Worker-pool size: explicit override > PHASEKIT_THREADS > hardware.
int resolve_thread_count(int override_threads);

/// Runs every (solver, sweep point, trial) work item; scenes and noise are
/// seeded per trial index only, solver streams fold in the solver id, so
/// adding a solver never perturbs the others.
ExperimentResult run_experiment(const ExperimentSpec& spec, int threads = 0);

/// Writes summary.csv and trials.csv under outDir (created if needed).
void write_experiment_csv(const ExperimentResult& result, const std::string& outDir);

}  // namespace phasekit
