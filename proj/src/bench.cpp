#include "phasekit/bench.hpp"

#include "phasekit/altproj.hpp"
#include "phasekit/diagnostics.hpp"
#include "phasekit/lifted.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

namespace phasekit {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;

const std::set<std::string>& known_solvers() {
  static const std::set<std::string> ids = {"gespar", "sparse-fienup", "hio", "oss", "er",
                                            "gs", "phaselift", "cprl", "qcs"};
  return ids;
}

std::uint64_t work_key(Index k, Index trial) {
  return (static_cast<std::uint64_t>(k) << 32) ^ static_cast<std::uint64_t>(trial);
}

}  // namespace

Signal gen_sparse_vector(Index n, Index k, std::uint64_t seed) {
  if (k < 0 || k > n) throw std::invalid_argument("gen_sparse_vector: k out of range");
  std::mt19937_64 rng(seed);
  RVector x = RVector::Zero(n);
  if (k == 0) return Signal::from1d_real(x);
  std::vector<Index> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index j = 0; j < k; ++j) {
    std::uniform_int_distribution<Index> pick(j, n - 1);
    std::swap(pool[static_cast<size_t>(j)], pool[static_cast<size_t>(pick(rng))]);
  }
  std::uniform_real_distribution<double> mag(3.0, 4.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (Index j = 0; j < k; ++j) {
    double m = mag(rng);
    x(pool[static_cast<size_t>(j)]) = coin(rng) < 0.5 ? -m : m;
  }
  return Signal::from1d_real(x);
}

CircleScene gen_circle_image(Index gridPoints, Index imageSize, Index circleDiameter, Index s,
                             std::uint64_t seed) {
  if (gridPoints < 1 || imageSize < 1 || circleDiameter < 1)
    throw std::invalid_argument("gen_circle_image: bad geometry");
  const Index pitch = imageSize / gridPoints;
  if (pitch < circleDiameter)
    throw std::invalid_argument("gen_circle_image: grid pitch smaller than circle diameter");
  const Index d = gridPoints * gridPoints;
  if (s < 0 || s > d) throw std::invalid_argument("gen_circle_image: s out of range");

  CircleScene scene;
  scene.dict.signalShape = Shape::of2d(imageSize, imageSize);
  scene.dict.atoms = CMatrix::Zero(imageSize * imageSize, d);
  scene.dict.meta.resize(static_cast<size_t>(d));
  const double radius = static_cast<double>(circleDiameter) / 2.0;
  const double centerOff = static_cast<double>(circleDiameter - 1) / 2.0;
  for (Index gi = 0; gi < gridPoints; ++gi)
    for (Index gj = 0; gj < gridPoints; ++gj) {
      const Index atom = gi * gridPoints + gj;
      const double cy = static_cast<double>(gi * pitch) + centerOff;
      const double cx = static_cast<double>(gj * pitch) + centerOff;
      scene.dict.meta[static_cast<size_t>(atom)] = {cx, cy, static_cast<double>(circleDiameter)};
      for (Index a = gi * pitch; a < std::min(imageSize, gi * pitch + circleDiameter); ++a)
        for (Index b = gj * pitch; b < std::min(imageSize, gj * pitch + circleDiameter); ++b) {
          const double dy = static_cast<double>(a) - cy, dx = static_cast<double>(b) - cx;
          if (dy * dy + dx * dx <= radius * radius)
            scene.dict.atoms(a * imageSize + b, atom) = Complex(1.0, 0.0);
        }
    }

  std::mt19937_64 rng(seed);
  scene.code = CVector::Zero(d);
  std::vector<Index> pool(static_cast<size_t>(d));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index j = 0; j < s; ++j) {
    std::uniform_int_distribution<Index> pick(j, d - 1);
    std::swap(pool[static_cast<size_t>(j)], pool[static_cast<size_t>(pick(rng))]);
  }
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  for (Index j = 0; j < s; ++j) scene.code(pool[static_cast<size_t>(j)]) = Complex(amp(rng), 0.0);
  scene.image = Signal(scene.dict.signalShape, scene.dict.atoms * scene.code);
  return scene;
}

Signal gen_phantom(Index size, std::uint64_t seed) {
  if (size < 32) throw std::invalid_argument("gen_phantom: size must be >= 32");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const double cx = static_cast<double>(size) / 2.0, cy = cx;
  const double r0 = (0.13 + 0.07 * uni(rng)) * static_cast<double>(size);
  const double a1 = 0.12 * uni(rng), p1 = 2 * kPi * uni(rng);
  const double a2 = 0.08 * uni(rng), p2 = 2 * kPi * uni(rng);

  struct Bump {
    double bx, by, amp, sig;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 7; ++b) {
    double ang = 2 * kPi * uni(rng), rad = 0.55 * r0 * uni(rng);
    bumps.push_back({cx + rad * std::cos(ang), cy + rad * std::sin(ang),
                     -0.35 + 0.95 * uni(rng), (0.05 + 0.07 * uni(rng)) * r0 + 0.5});
  }
  const double rimW = 0.06 * r0 + 0.5;

  CVector v = CVector::Zero(size * size);
  for (Index i = 0; i < size; ++i)
    for (Index j = 0; j < size; ++j) {
      const double dy = static_cast<double>(i) - cy, dx = static_cast<double>(j) - cx;
      const double dist = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      const double rim = r0 * (1.0 + a1 * std::sin(3 * theta + p1) + a2 * std::sin(5 * theta + p2));
      if (dist > rim) continue;
      double val = 1.0 + 0.9 * std::exp(-0.5 * (dist - rim) * (dist - rim) / (rimW * rimW));
      for (const auto& b : bumps) {
        double bd2 = (static_cast<double>(j) - b.bx) * (static_cast<double>(j) - b.bx) +
                     (static_cast<double>(i) - b.by) * (static_cast<double>(i) - b.by);
        val += b.amp * std::exp(-0.5 * bd2 / (b.sig * b.sig));
      }
      v(i * size + j) = Complex(std::max(val, 0.05), 0.0);
    }
  return Signal(Shape::of2d(size, size), std::move(v));
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::runtime_error("spec field 'trials': must be >= 1");
  if (!(success.residualThreshold > 0))
    throw std::runtime_error("spec field 'success.residualThreshold': must be > 0");
  if (solvers.empty()) throw std::runtime_error("spec field 'solvers': must not be empty");
  for (const auto& s : solvers)
    if (!known_solvers().count(s.id))
      throw std::runtime_error("spec field 'solvers.id': unknown solver '" + s.id + "'");
  if (scene.kind != "sparse1d" && scene.kind != "phantom2d" && scene.kind != "circles" &&
      scene.kind != "dense1d")
    throw std::runtime_error("spec field 'scene.kind': unknown kind '" + scene.kind + "'");
  if (model.kind != "oversampledFourier" && model.kind != "generalLinearGaussian" &&
      model.kind != "lowPassFourier")
    throw std::runtime_error("spec field 'model.kind': unknown kind '" + model.kind + "'");
  if (noise.kind != "none" && noise.kind != "poisson")
    throw std::runtime_error("spec field 'noise.kind': unknown kind '" + noise.kind + "'");
  if (scene.n < 1) throw std::runtime_error("spec field 'scene.n': must be >= 1");
  if (scene.kind == "sparse1d" || scene.kind == "circles") {
    if (scene.sparsity.empty())
      throw std::runtime_error("spec field 'scene.sparsity': must not be empty");
    for (Index k : scene.sparsity)
      if (k < 1) throw std::runtime_error("spec field 'scene.sparsity': entries must be >= 1");
  }
}

namespace {

template <typename T>
T field(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::runtime_error(std::string("spec field '") + key + "': wrong type");
  }
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("spec: malformed JSON: ") + e.what());
  }
  ExperimentSpec spec;
  spec.name = field<std::string>(j, "name", spec.name);
  spec.trials = field<Index>(j, "trials", spec.trials);
  spec.baseSeed = field<std::uint64_t>(j, "baseSeed", spec.baseSeed);
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    spec.scene.kind = field<std::string>(s, "kind", spec.scene.kind);
    spec.scene.n = field<Index>(s, "n", spec.scene.n);
    if (s.contains("sparsity")) {
      if (s.at("sparsity").is_array())
        spec.scene.sparsity = field<std::vector<Index>>(s, "sparsity", spec.scene.sparsity);
      else
        spec.scene.sparsity = {field<Index>(s, "sparsity", 5)};
    }
    spec.scene.gridPoints = field<Index>(s, "gridPoints", spec.scene.gridPoints);
    spec.scene.imageSize = field<Index>(s, "imageSize", spec.scene.imageSize);
    spec.scene.circleDiameter = field<Index>(s, "circleDiameter", spec.scene.circleDiameter);
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    spec.model.kind = field<std::string>(m, "kind", spec.model.kind);
    spec.model.m = field<Index>(m, "m", spec.model.m);
    spec.model.complexVectors = field<bool>(m, "complexVectors", spec.model.complexVectors);
    spec.model.cutoff = field<double>(m, "cutoff", spec.model.cutoff);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    spec.noise.kind = field<std::string>(n, "kind", spec.noise.kind);
    spec.noise.photonBudget = field<double>(n, "photonBudget", spec.noise.photonBudget);
    spec.noise.missingCenter = field<Index>(n, "missingCenter", spec.noise.missingCenter);
  }
  if (j.contains("solvers")) {
    if (!j.at("solvers").is_array()) throw std::runtime_error("spec field 'solvers': must be an array");
    spec.solvers.clear();
    for (const auto& s : j.at("solvers")) {
      SolverSpec ss;
      if (!s.contains("id")) throw std::runtime_error("spec field 'solvers.id': missing");
      ss.id = field<std::string>(s, "id", "");
      ss.restarts = field<Index>(s, "restarts", ss.restarts);
      ss.maxIters = field<Index>(s, "maxIters", ss.maxIters);
      ss.beta = field<double>(s, "beta", ss.beta);
      ss.maxSwaps = field<Index>(s, "maxSwaps", ss.maxSwaps);
      ss.tauScale = field<double>(s, "tauScale", ss.tauScale);
      ss.supportDilation = field<Index>(s, "supportDilation", ss.supportDilation);
      ss.lambda = field<double>(s, "lambda", ss.lambda);
      ss.etaScale = field<double>(s, "etaScale", ss.etaScale);
      ss.innerIters = field<Index>(s, "innerIters", ss.innerIters);
      spec.solvers.push_back(std::move(ss));
    }
  }
  if (j.contains("success")) {
    const json& s = j.at("success");
    spec.success.residualThreshold = field<double>(s, "residualThreshold", spec.success.residualThreshold);
    spec.success.requireSupportMatch = field<bool>(s, "requireSupportMatch", spec.success.requireSupportMatch);
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open spec: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::pair<double, double> wilson_interval(Index successes, Index trials) {
  const double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

int resolve_thread_count(int override_threads) {
  if (override_threads > 0) return override_threads;
  if (const char* env = std::getenv("PHASEKIT_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

struct SceneData {
  Signal truth;
  std::optional<SupportMask> support;  // nonzero support of the truth
  std::optional<CircleScene> circles;
};

SceneData make_scene(const ExperimentSpec& spec, Index k, Index trial) {
  const std::uint64_t seed = seed_mix(seed_mix(spec.baseSeed, fnv1a("scene")), work_key(k, trial));
  SceneData data;
  if (spec.scene.kind == "sparse1d") {
    data.truth = gen_sparse_vector(spec.scene.n, k, seed);
  } else if (spec.scene.kind == "dense1d") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CVector x(spec.scene.n);
    for (Index i = 0; i < x.size(); ++i) x(i) = Complex(gauss(rng), gauss(rng));
    data.truth = Signal::from1d(std::move(x));
  } else if (spec.scene.kind == "phantom2d") {
    data.truth = gen_phantom(spec.scene.n, seed);
    data.support = SupportMask::from_nonzero(data.truth);
  } else {
    data.circles = gen_circle_image(spec.scene.gridPoints, spec.scene.imageSize,
                                    spec.scene.circleDiameter, k, seed);
    data.truth = data.circles->image;
  }
  return data;
}

MeasurementModel make_model(const ExperimentSpec& spec, const Shape& signalShape, Index k, Index trial) {
  if (spec.model.kind == "oversampledFourier") {
    Shape grid = signalShape.ndim == 1 ? Shape::of1d(spec.model.m)
                                       : Shape::of2d(spec.model.m, spec.model.m);
    return OversampledFourier{grid};
  }
  if (spec.model.kind == "lowPassFourier") {
    Shape grid = signalShape.ndim == 1 ? Shape::of1d(spec.model.m)
                                       : Shape::of2d(spec.model.m, spec.model.m);
    return LowPassFourier{grid, spec.model.cutoff};
  }
  const std::uint64_t seed = seed_mix(seed_mix(spec.baseSeed, fnv1a("model")), work_key(k, trial));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix vectors(spec.model.m, signalShape.count());
  for (Index r = 0; r < vectors.rows(); ++r)
    for (Index c = 0; c < vectors.cols(); ++c)
      vectors(r, c) = spec.model.complexVectors ? Complex(gauss(rng), gauss(rng))
                                                : Complex(gauss(rng), 0.0);
  return GeneralLinear{std::move(vectors)};
}

Observation make_observation(const ExperimentSpec& spec, const Signal& truth,
                             const MeasurementModel& model, Index k, Index trial) {
  Observation obs = intensity(truth, model);
  if (spec.noise.kind == "poisson") {
    const std::uint64_t seed = seed_mix(seed_mix(spec.baseSeed, fnv1a("noise")), work_key(k, trial));
    obs = add_poisson_noise(obs, spec.noise.photonBudget, seed);
  }
  if (spec.noise.missingCenter > 0) obs = apply_missing_center(obs, spec.noise.missingCenter);
  return obs;
}

struct SolveOutcome {
  Signal recon;
  Index iterations = 0;
  bool failure = false;
};

std::vector<Index> valid_half_bins(const Observation& obs, Index m) {
  std::vector<Index> bins;
  for (Index b = 0; b <= m / 2; ++b)
    if (obs.valid(b)) bins.push_back(b);
  return bins;
}

SolveOutcome run_one_solver(const ExperimentSpec& spec, const SolverSpec& solver,
                            const SceneData& scene, const MeasurementModel& model,
                            const Observation& obs, Index k, std::uint64_t seed) {
  SolveOutcome out;
  if (solver.id == "gespar") {
    const auto* f = std::get_if<OversampledFourier>(&model);
    GesparConfig cfg;
    cfg.sparsity = k;
    cfg.maxSwaps = solver.maxSwaps;
    cfg.seed = seed;
    QuadraticSystem sys = [&]() {
      if (f && f->grid.ndim == 1) {
        const Index m = f->grid.dim(0);
        // clean full observations also yield support hints from the
        // measured autocorrelation
        if (spec.noise.kind == "none" && obs.valid.all()) {
          FourierSupportHints hints = fourier_support_hints(obs.y, m, scene.truth.size());
          cfg.pinnedIndices = hints.pinnedIndices;
          cfg.candidatePool = hints.candidatePool;
        }
        std::vector<Index> bins = valid_half_bins(obs, m);
        RVector y(static_cast<Index>(bins.size()));
        for (size_t i = 0; i < bins.size(); ++i) y(static_cast<Index>(i)) = obs.y(bins[i]);
        return QuadraticSystem::fourier(scene.truth.size(), m, std::move(y), std::move(bins));
      }
      return quadratic_system_from(model, obs, scene.truth.is_real());
    }();
    cfg.tau = solver.tauScale * sys.y().squaredNorm();
    auto [x, report] = gespar_solve(sys, cfg);
    out.recon = x;
    out.iterations = report.swaps;
    out.failure = !report.reachedTau;
    return out;
  }
  if (solver.id == "sparse-fienup") {
    Dictionary dict = scene.circles ? scene.circles->dict : Dictionary::identity(scene.truth.size());
    AltProjConfig cfg;
    cfg.maxIters = solver.maxIters > 0 ? solver.maxIters : 600;
    cfg.epsilon = 1e-12 * obs.y.sum();
    double bestObj = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < std::max<Index>(1, solver.restarts); ++r) {
      cfg.seed = seed_mix(seed, static_cast<std::uint64_t>(r));
      auto [recon, report] = sparse_fienup_solve(obs, dict, k, cfg);
      out.iterations += report.iterations;
      if (report.finalObjective < bestObj) {
        bestObj = report.finalObjective;
        out.recon = recon;
      }
    }
    return out;
  }
  if (solver.id == "hio" || solver.id == "oss" || solver.id == "er") {
    RealSpaceConstraint constraint;
    if (scene.support) constraint.support = scene.support->dilated(solver.supportDilation);
    constraint.realValued = scene.truth.is_real();
    constraint.nonnegative = constraint.realValued;
    AltProjConfig cfg;
    cfg.beta = solver.beta;
    cfg.maxIters = solver.maxIters > 0 ? solver.maxIters : (solver.id == "oss" ? 2000 : 1000);
    cfg.seed = seed;
    IterateTrace trace = solver.id == "oss"
                             ? oss_solve(obs, constraint, cfg)
                             : fienup_solve(obs, constraint, cfg,
                                            solver.id == "er" ? FienupVariant::ER : FienupVariant::HIO);
    out.recon = trace.reconstruction;
    out.iterations = trace.iterations;
    return out;
  }
  if (solver.id == "gs") {
    CVector mags(scene.truth.size());
    for (Index i = 0; i < mags.size(); ++i) mags(i) = Complex(std::abs(scene.truth[i]), 0.0);
    AltProjConfig cfg;
    cfg.maxIters = solver.maxIters > 0 ? solver.maxIters : 500;
    cfg.epsilon = 1e-12 * obs.y.sum();
    cfg.seed = seed;
    IterateTrace trace = gs_solve(obs, Signal(scene.truth.shape(), std::move(mags)), cfg);
    out.recon = trace.reconstruction;
    out.iterations = trace.iterations;
    return out;
  }
  // lifted solvers
  CMatrix vectors;
  if (const auto* g = std::get_if<GeneralLinear>(&model)) {
    vectors = g->vectors;
  } else if (const auto* f = std::get_if<OversampledFourier>(&model); f && f->grid.ndim == 1) {
    const Index m = f->grid.dim(0);
    std::vector<Index> bins = valid_half_bins(obs, m);
    vectors.resize(static_cast<Index>(bins.size()), scene.truth.size());
    for (size_t i = 0; i < bins.size(); ++i)
      for (Index n = 0; n < scene.truth.size(); ++n)
        vectors(static_cast<Index>(i), n) =
            std::polar(1.0, -2.0 * kPi * static_cast<double>(bins[i] * n) / static_cast<double>(m));
  } else {
    throw std::runtime_error("solver '" + solver.id + "' needs general-linear or 1D Fourier measurements");
  }
  Observation lifted = obs;
  if (vectors.rows() != obs.y.size()) {
    const auto* f = std::get_if<OversampledFourier>(&model);
    std::vector<Index> bins = valid_half_bins(obs, f->grid.dim(0));
    RVector y(static_cast<Index>(bins.size()));
    BoolArray valid = BoolArray::Constant(static_cast<Index>(bins.size()), true);
    for (size_t i = 0; i < bins.size(); ++i) y(static_cast<Index>(i)) = obs.y(bins[i]);
    lifted.y = std::move(y);
    lifted.valid = std::move(valid);
    lifted.dims = {static_cast<Index>(bins.size())};
  }
  LiftedConfig cfg;
  cfg.seed = seed;
  cfg.lambda = solver.lambda;
  if (solver.innerIters > 0) cfg.innerIters = static_cast<int>(solver.innerIters);
  if (solver.id == "phaselift") {
    LiftedResult res = phaselift_solve(lifted, vectors, cfg);
    out.recon = extract_rank1(res.X);
    out.failure = !res.feasible;
    out.iterations = res.iterations;
    return out;
  }
  if (solver.id == "cprl") {
    LiftedResult res = cprl_solve(lifted, vectors, cfg);
    out.recon = extract_rank1(res.X);
    out.failure = !res.feasible;
    out.iterations = res.iterations;
    return out;
  }
  if (solver.id == "qcs") {
    const double l1 = scene.truth.flat().cwiseAbs().sum();
    cfg.eta = solver.etaScale * l1 * scene.truth.norm();
    cfg.innerIters = solver.innerIters > 0 ? static_cast<int>(solver.innerIters) : 400;
    cfg.outerIters = 12;
    LiftedResult res = qcs_solve(lifted, vectors, cfg);
    out.recon = extract_rank1(res.X);
    out.failure = !res.feasible;
    out.iterations = res.iterations;
    return out;
  }
  throw std::runtime_error("unknown solver id: " + solver.id);
}

bool support_match(const Signal& aligned, const Signal& truth) {
  Shape common = aligned.shape();
  for (int a = 0; a < common.ndim; ++a)
    common.dims[static_cast<size_t>(a)] = std::max(aligned.dim(a), truth.dim(a));
  const Signal sa = embed(aligned, common);
  const Signal st = embed(truth, common);
  double maxT = 0.0;
  for (Index i = 0; i < st.size(); ++i) maxT = std::max(maxT, std::abs(st[i]));
  const double tol = 1e-3 * maxT;
  for (Index i = 0; i < common.count(); ++i) {
    const bool inT = std::abs(st[i]) > 0.0;
    const bool inA = std::abs(sa[i]) > tol;
    if (inT != inA) return false;
  }
  return true;
}

TrialReport run_single_trial(const ExperimentSpec& spec, const SolverSpec& solver, Index k,
                             Index trial) {
  TrialReport report;
  report.solverId = solver.id;
  report.sweepKey = k;
  report.trial = trial;
  report.seed = seed_mix(seed_mix(spec.baseSeed, fnv1a(solver.id)), work_key(k, trial));
  const auto t0 = std::chrono::steady_clock::now();
  try {
    SceneData scene = make_scene(spec, k, trial);
    MeasurementModel model = make_model(spec, scene.truth.shape(), k, trial);
    Observation obs = make_observation(spec, scene.truth, model, k, trial);
    SolveOutcome out = run_one_solver(spec, solver, scene, model, obs, k, report.seed);
    report.iterations = out.iterations;
    report.solverFailure = out.failure;

    AlignmentResult align = align_to_reference(out.recon, scene.truth);
    report.alignedResidual = align.residual;
    Shape common = align.aligned.shape();
    for (int a = 0; a < common.ndim; ++a)
      common.dims[static_cast<size_t>(a)] = std::max(align.aligned.dim(a), scene.truth.dim(a));
    report.E = recovery_error_E(embed(align.aligned, common), embed(scene.truth, common));

    if (const auto* f = std::get_if<OversampledFourier>(&model)) {
      Signal spectrum = oversampled_dft(embed(out.recon, f->grid), f->grid);
      std::vector<double> me, re;
      for (Index i = 0; i < obs.count(); ++i) {
        if (!obs.valid(i)) continue;
        me.push_back(std::sqrt(std::max(0.0, obs.y(i))));
        re.push_back(std::abs(spectrum[i]));
      }
      RVector mv = Eigen::Map<const RVector>(me.data(), static_cast<Index>(me.size()));
      RVector rv = Eigen::Map<const RVector>(re.data(), static_cast<Index>(re.size()));
      auto [rf, zeta] = r_factor(mv, rv);
      report.R_F = rf;
      (void)zeta;
    }

    bool ok = align.residual < spec.success.residualThreshold;
    if (ok && spec.success.requireSupportMatch) {
      if (scene.circles) {
        // success on the code support: project the reconstruction back
        OmpResult code = omp_solve(out.recon, scene.circles->dict, k);
        std::set<Index> got(code.support.begin(), code.support.end());
        std::set<Index> want;
        for (Index j = 0; j < scene.circles->code.size(); ++j)
          if (scene.circles->code(j) != Complex(0, 0)) want.insert(j);
        ok = got == want;
      } else {
        ok = support_match(align.aligned, scene.truth);
      }
    }
    report.success = ok;
  } catch (const std::exception&) {
    report.solverFailure = true;
    report.success = false;
    report.alignedResidual = std::numeric_limits<double>::infinity();
  }
  report.wallTimeSec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int threads) {
  spec.validate();
  const bool sweeps = spec.scene.kind == "sparse1d" || spec.scene.kind == "circles";
  const std::vector<Index> keys = sweeps ? spec.scene.sparsity : std::vector<Index>{0};

  struct WorkItem {
    size_t solverIdx;
    Index k;
    Index trial;
  };
  std::vector<WorkItem> items;
  for (size_t s = 0; s < spec.solvers.size(); ++s)
    for (Index k : keys)
      for (Index t = 0; t < spec.trials; ++t) items.push_back({s, k, t});

  ExperimentResult result;
  result.trials.resize(items.size());
  const int nThreads = std::min<int>(resolve_thread_count(threads), static_cast<int>(items.size()));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= items.size()) break;
      const WorkItem& w = items[i];
      result.trials[i] = run_single_trial(spec, spec.solvers[w.solverIdx], w.k, w.trial);
    }
  };
  if (nThreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nThreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (size_t s = 0; s < spec.solvers.size(); ++s)
    for (Index k : keys) {
      SummaryRow row;
      row.solverId = spec.solvers[s].id;
      row.sweepKey = k;
      for (size_t i = 0; i < items.size(); ++i) {
        if (items[i].solverIdx != s || items[i].k != k) continue;
        ++row.trials;
        if (result.trials[i].success) ++row.successes;
      }
      row.rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
      std::tie(row.ciLo, row.ciHi) = wilson_interval(row.successes, row.trials);
      result.summary.push_back(std::move(row));
    }
  return result;
}

void write_experiment_csv(const ExperimentResult& result, const std::string& outDir) {
  std::filesystem::create_directories(outDir);
  {
    std::ofstream os(outDir + "/summary.csv");
    if (!os) throw std::runtime_error("cannot open for writing: " + outDir + "/summary.csv");
    os << "# phasekit summary format v1\n";
    os << "solver,k,trials,successes,rate,ci_lo,ci_hi\n";
    char buf[160];
    for (const auto& row : result.summary) {
      std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%lld,%.6f,%.6f,%.6f\n", row.solverId.c_str(),
                    static_cast<long long>(row.sweepKey), static_cast<long long>(row.trials),
                    static_cast<long long>(row.successes), row.rate, row.ciLo, row.ciHi);
      os << buf;
    }
  }
  {
    std::ofstream os(outDir + "/trials.csv");
    if (!os) throw std::runtime_error("cannot open for writing: " + outDir + "/trials.csv");
    os << "solver,k,trial,seed,success,residual,E,R_F,time_s,iters\n";
    char buf[320];
    for (const auto& t : result.trials) {
      std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%llu,%d,%.9e,%.9e,%.9e,%.3f,%lld\n",
                    t.solverId.c_str(), static_cast<long long>(t.sweepKey),
                    static_cast<long long>(t.trial), static_cast<unsigned long long>(t.seed),
                    t.success ? 1 : 0, t.alignedResidual, t.E, t.R_F, t.wallTimeSec,
                    static_cast<long long>(t.iterations));
      os << buf;
    }
  }
}

}  // namespace phasekit
