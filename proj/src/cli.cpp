#include "phasekit/cli.hpp"

#include "phasekit/altproj.hpp"
#include "phasekit/bench.hpp"
#include "phasekit/diagnostics.hpp"
#include "phasekit/greedy.hpp"
#include "phasekit/io.hpp"
#include "phasekit/lifted.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

namespace phasekit {

namespace {

Signal load_signal_any(const std::string& path) {
  return path.size() > 4 && path.substr(path.size() - 4) == ".csv" ? read_signal_csv(path)
                                                                   : read_signal_file(path);
}

SupportMask load_support(const std::string& path) {
  Signal s = load_signal_any(path);
  BoolArray m(s.size());
  for (Index i = 0; i < s.size(); ++i) m(i) = std::abs(s[i]) > 0.5;
  return SupportMask(s.shape(), std::move(m));
}

Signal mask_as_signal(const SupportMask& mask) {
  CVector v(mask.flat().size());
  for (Index i = 0; i < v.size(); ++i) v(i) = mask[i] ? Complex(1, 0) : Complex(0, 0);
  return Signal(mask.shape(), std::move(v));
}

struct GenerateOptions {
  std::string scene = "sparse1d";
  Index n = 64;
  Index k = 5;
  Index m = 128;
  Index gridPoints = 15, imageSize = 195, circleDiameter = 13;
  std::uint64_t seed = 1;
  double photonBudget = 0.0;
  Index missingCenter = 0;
  std::string out = ".";
};

int run_generate(const GenerateOptions& o) {
  std::filesystem::create_directories(o.out);
  Signal truth;
  std::optional<CircleScene> circles;
  if (o.scene == "sparse1d") {
    truth = gen_sparse_vector(o.n, o.k, o.seed);
  } else if (o.scene == "phantom2d") {
    truth = gen_phantom(o.n, o.seed);
  } else if (o.scene == "circles") {
    circles = gen_circle_image(o.gridPoints, o.imageSize, o.circleDiameter, o.k, o.seed);
    truth = circles->image;
  } else {
    std::cerr << "unknown scene kind: " << o.scene << "\n";
    return 1;
  }
  Shape grid = truth.ndim() == 1 ? Shape::of1d(o.m) : Shape::of2d(o.m, o.m);
  Observation obs = intensity(truth, OversampledFourier{grid});
  if (o.photonBudget > 0) obs = add_poisson_noise(obs, o.photonBudget, seed_mix(o.seed, fnv1a("noise")));
  if (o.missingCenter > 0) obs = apply_missing_center(obs, o.missingCenter);

  write_signal_file(o.out + "/truth.bin", truth);
  write_signal_csv(o.out + "/truth.csv", truth);
  write_observation_csv(o.out + "/obs.csv", obs);
  write_signal_file(o.out + "/support.bin", mask_as_signal(SupportMask::from_nonzero(truth)));
  if (circles) {
    std::vector<Signal> atoms;
    for (Index d = 0; d < circles->dict.atoms.cols(); ++d)
      atoms.push_back(Signal(circles->dict.signalShape, circles->dict.atoms.col(d)));
    write_signals_file(o.out + "/dict.bin", atoms);
    std::ofstream meta(o.out + "/dict.json");
    meta << "{\"atoms\": [";
    for (size_t a = 0; a < circles->dict.meta.size(); ++a) {
      const auto& mm = circles->dict.meta[a];
      meta << (a ? ", " : "") << "{\"cx\": " << mm.cx << ", \"cy\": " << mm.cy
           << ", \"diameter\": " << mm.diameter << "}";
    }
    meta << "]}\n";
  }
  std::cout << "wrote scene '" << o.scene << "' to " << o.out << "\n";
  return 0;
}

struct SolveOptions {
  std::string alg = "hio";
  std::string obsPath;
  std::string supportPath;
  std::string magnitudePath;
  std::string dictPath;
  std::string vectorsPath;
  std::string truthPath;
  Index sparsity = 0;
  double beta = 0.9;
  Index iters = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  bool nonneg = false;
  bool real = false;
  std::string out = ".";
};

int run_solve(const SolveOptions& o) {
  std::filesystem::create_directories(o.out);
  Observation obs = read_observation_csv(o.obsPath);
  Signal recon;
  bool failure = false;
  IterateTrace trace;

  if (o.alg == "gs") {
    if (o.magnitudePath.empty()) {
      std::cerr << "gs requires --magnitude\n";
      return 1;
    }
    AltProjConfig cfg;
    cfg.maxIters = o.iters > 0 ? o.iters : 500;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    trace = gs_solve(obs, load_signal_any(o.magnitudePath), cfg);
    recon = trace.reconstruction;
    failure = o.epsilon > 0 && !trace.converged;
  } else if (o.alg == "hio" || o.alg == "oss" || o.alg == "er" || o.alg == "io" || o.alg == "oo") {
    RealSpaceConstraint constraint;
    if (!o.supportPath.empty()) constraint.support = load_support(o.supportPath);
    constraint.nonnegative = o.nonneg;
    constraint.realValued = o.real;
    constraint.validate();
    AltProjConfig cfg;
    cfg.beta = o.beta;
    cfg.maxIters = o.iters > 0 ? o.iters : (o.alg == "oss" ? 2000 : 1000);
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    trace = o.alg == "oss" ? oss_solve(obs, constraint, cfg)
                           : fienup_solve(obs, constraint, cfg, parse_fienup_variant(o.alg));
    recon = trace.reconstruction;
    failure = o.epsilon > 0 && !trace.converged;
  } else if (o.alg == "gespar") {
    if (obs.dims.size() != 1 || o.sparsity < 1) {
      std::cerr << "gespar requires a 1D Fourier observation and --sparsity\n";
      return 1;
    }
    const Index m = obs.dims[0];
    std::vector<Index> bins;
    for (Index b = 0; b <= m / 2; ++b)
      if (obs.valid(b)) bins.push_back(b);
    RVector y(static_cast<Index>(bins.size()));
    for (size_t i = 0; i < bins.size(); ++i) y(static_cast<Index>(i)) = obs.y(bins[i]);
    GesparConfig cfg;
    cfg.sparsity = o.sparsity;
    cfg.seed = o.seed;
    cfg.maxSwaps = o.iters > 0 ? o.iters : 6400;
    cfg.tau = 1e-4 * y.squaredNorm();
    auto [x, report] = gespar_solve(QuadraticSystem::fourier((m + 1) / 2, m, std::move(y), std::move(bins)), cfg);
    recon = x;
    failure = !report.reachedTau;
  } else if (o.alg == "sparse-fienup") {
    if (o.sparsity < 1) {
      std::cerr << "sparse-fienup requires --sparsity\n";
      return 1;
    }
    Dictionary dict;
    if (o.dictPath.empty()) {
      Index n = obs.dims.size() == 1 ? (obs.dims[0] + 1) / 2 : 0;
      if (n < 1) {
        std::cerr << "sparse-fienup without --dict requires a 1D observation\n";
        return 1;
      }
      dict = Dictionary::identity(n);
    } else {
      std::vector<Signal> atoms = read_signals_file(o.dictPath);
      dict.signalShape = atoms[0].shape();
      dict.atoms.resize(atoms[0].size(), static_cast<Index>(atoms.size()));
      for (size_t a = 0; a < atoms.size(); ++a) dict.atoms.col(static_cast<Index>(a)) = atoms[a].flat();
    }
    AltProjConfig cfg;
    cfg.maxIters = o.iters > 0 ? o.iters : 600;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;
    auto [x, report] = sparse_fienup_solve(obs, dict, o.sparsity, cfg);
    recon = x;
    failure = o.epsilon > 0 && !report.converged;
  } else if (o.alg == "phaselift" || o.alg == "cprl" || o.alg == "qcs") {
    if (o.vectorsPath.empty()) {
      std::cerr << o.alg << " requires --vectors (one record per measurement vector)\n";
      return 1;
    }
    std::vector<Signal> rows = read_signals_file(o.vectorsPath);
    CMatrix vectors(static_cast<Index>(rows.size()), rows[0].size());
    for (size_t r = 0; r < rows.size(); ++r) vectors.row(static_cast<Index>(r)) = rows[r].flat().transpose();
    LiftedConfig cfg;
    cfg.seed = o.seed;
    if (o.iters > 0) cfg.innerIters = static_cast<int>(o.iters);
    LiftedResult res;
    if (o.alg == "phaselift") {
      res = phaselift_solve(obs, vectors, cfg);
    } else if (o.alg == "cprl") {
      cfg.lambda = 0.1;
      res = cprl_solve(obs, vectors, cfg);
    } else {
      if (o.sparsity < 1) {
        std::cerr << "qcs requires --sparsity to size the row-norm budget\n";
        return 1;
      }
      cfg.eta = 4.0 * static_cast<double>(o.sparsity) * std::sqrt(obs.y.cwiseAbs().mean());
      res = qcs_solve(obs, vectors, cfg);
    }
    recon = extract_rank1(res.X);
    failure = !res.feasible;
  } else {
    std::cerr << "unknown algorithm: " << o.alg << "\n";
    return 1;
  }

  write_signal_file(o.out + "/recon.bin", recon);
  if (!trace.errors.empty()) write_trace_csv(o.out + "/trace.csv", trace);

  MetricReport metrics;
  {
    Shape grid = obs.dims.size() == 1 ? Shape::of1d(obs.dims[0]) : Shape::of2d(obs.dims[0], obs.dims[1]);
    bool gridable = obs.dims.size() <= 2 && recon.ndim() == grid.ndim;
    for (int a = 0; gridable && a < grid.ndim; ++a) gridable = recon.dim(a) <= grid.dim(a);
    if (gridable) {
      Signal spec = oversampled_dft(recon, grid);
      std::vector<double> me, re;
      for (Index i = 0; i < obs.count(); ++i) {
        if (!obs.valid(i)) continue;
        me.push_back(std::sqrt(std::max(0.0, obs.y(i))));
        re.push_back(std::abs(spec[i]));
      }
      auto [rf, zeta] = r_factor(Eigen::Map<const RVector>(me.data(), static_cast<Index>(me.size())),
                                 Eigen::Map<const RVector>(re.data(), static_cast<Index>(re.size())));
      metrics.R_F = rf;
      metrics.zeta = zeta;
    }
    if (!o.truthPath.empty()) {
      Signal truth = load_signal_any(o.truthPath);
      AlignmentResult align = align_to_reference(recon, truth);
      metrics.alignedResidual = align.residual;
      Shape common = align.aligned.shape();
      for (int a = 0; a < common.ndim; ++a)
        common.dims[static_cast<size_t>(a)] = std::max(align.aligned.dim(a), truth.dim(a));
      metrics.E = recovery_error_E(embed(align.aligned, common), embed(truth, common));
    }
  }
  std::ofstream mj(o.out + "/metrics.json");
  mj << metrics.to_json() << "\n";
  std::cout << metrics.to_json() << "\n";
  return failure ? 2 : 0;
}

struct DiagnoseOptions {
  std::string signalPath;
  std::string matrixPath;
  bool collisionFree = false;
  bool coherence = false;
  bool complement = false;
  Index ripK = 0;
};

int run_diagnose(const DiagnoseOptions& o) {
  bool did = false;
  if (o.collisionFree) {
    if (o.signalPath.empty()) {
      std::cerr << "--collision-free requires --signal\n";
      return 1;
    }
    CollisionCheck res = collision_free_check(load_signal_any(o.signalPath));
    std::cout << "collision_free: " << (res.collisionFree ? "true" : "false") << "\n";
    if (!res.collisionFree)
      std::cout << "witness: (" << res.witness[0] << ", " << res.witness[1] << ", " << res.witness[2]
                << ", " << res.witness[3] << ")\n";
    did = true;
  }
  if (o.coherence || o.complement || o.ripK > 0) {
    if (o.matrixPath.empty()) {
      std::cerr << "matrix diagnostics require --matrix\n";
      return 1;
    }
    Signal m = load_signal_any(o.matrixPath);
    if (m.ndim() != 2) {
      std::cerr << "--matrix must hold a 2D record\n";
      return 1;
    }
    CMatrix mat = m.as2d();
    if (o.coherence) {
      std::cout << "coherence_mu: " << coherence_mu(mat) << "\n";
      did = true;
    }
    if (o.ripK > 0) {
      std::cout << "rip_delta_" << o.ripK << ": " << rip_delta(mat.real(), o.ripK) << "\n";
      did = true;
    }
    if (o.complement) {
      ComplementCheck res = complement_property_check(RMatrix(mat.real()));
      std::cout << "complement_property: " << (res.holds ? "true" : "false") << "\n";
      if (!res.holds) {
        std::cout << "witness_subset:";
        for (Index i : res.witness) std::cout << ' ' << i;
        std::cout << "\n";
      }
      did = true;
    }
  }
  if (!did) {
    std::cerr << "diagnose: nothing to do (pass --collision-free, --coherence, --rip K or --complement)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"phasekit: phase retrieval toolkit"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* cgen = app.add_subcommand("generate", "emit scene and observation files");
  cgen->add_option("--scene", gen.scene, "sparse1d | phantom2d | circles");
  cgen->add_option("--n", gen.n, "signal length / image size");
  cgen->add_option("--k", gen.k, "sparsity / circle count");
  cgen->add_option("--m", gen.m, "measurement grid per axis");
  cgen->add_option("--grid-points", gen.gridPoints);
  cgen->add_option("--image-size", gen.imageSize);
  cgen->add_option("--circle-diameter", gen.circleDiameter);
  cgen->add_option("--seed", gen.seed);
  cgen->add_option("--photon-budget", gen.photonBudget, "add Poisson noise with this budget");
  cgen->add_option("--missing-center", gen.missingCenter, "beamstop radius in samples");
  cgen->add_option("--out", gen.out);

  SolveOptions sol;
  auto* csol = app.add_subcommand("solve", "run one solver on one observation");
  csol->add_option("--alg", sol.alg, "gs|er|hio|io|oo|oss|gespar|sparse-fienup|phaselift|cprl|qcs");
  csol->add_option("--obs", sol.obsPath, "observation CSV")->required();
  csol->add_option("--support", sol.supportPath, "support mask (PKSG 0/1 record)");
  csol->add_option("--magnitude", sol.magnitudePath, "real-space magnitude (gs)");
  csol->add_option("--dict", sol.dictPath, "dictionary atoms (PKSG records)");
  csol->add_option("--vectors", sol.vectorsPath, "measurement vectors (PKSG records)");
  csol->add_option("--truth", sol.truthPath, "ground truth for E / aligned residual");
  csol->add_option("--sparsity", sol.sparsity);
  csol->add_option("--beta", sol.beta);
  csol->add_option("--iters", sol.iters);
  csol->add_option("--epsilon", sol.epsilon);
  csol->add_option("--seed", sol.seed);
  csol->add_flag("--nonneg", sol.nonneg);
  csol->add_flag("--real", sol.real);
  csol->add_option("--out", sol.out);

  std::string specPath, benchOut = "results";
  int threads = 0;
  auto* cbench = app.add_subcommand("bench", "run an experiment spec");
  cbench->add_option("--spec", specPath, "experiment JSON")->required();
  cbench->add_option("--out", benchOut);
  cbench->add_option("--threads", threads, "worker pool size (overrides PHASEKIT_THREADS)");

  DiagnoseOptions diag;
  auto* cdiag = app.add_subcommand("diagnose", "uniqueness / conditioning checks");
  cdiag->add_option("--signal", diag.signalPath);
  cdiag->add_option("--matrix", diag.matrixPath);
  cdiag->add_flag("--collision-free", diag.collisionFree);
  cdiag->add_flag("--coherence", diag.coherence);
  cdiag->add_flag("--complement", diag.complement);
  cdiag->add_option("--rip", diag.ripK, "RIP order k");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cgen->parsed()) return run_generate(gen);
    if (csol->parsed()) return run_solve(sol);
    if (cbench->parsed()) {
      ExperimentSpec spec = ExperimentSpec::from_json_file(specPath);
      ExperimentResult result = run_experiment(spec, threads);
      write_experiment_csv(result, benchOut);
      std::cout << "wrote " << benchOut << "/summary.csv (" << result.summary.size() << " rows)\n";
      return 0;
    }
    if (cdiag->parsed()) return run_diagnose(diag);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace phasekit
