#include "phasekit/altproj.hpp"

#include "phasekit/fft.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr double kPi = std::numbers::pi;

Shape obs_grid(const Observation& obs) {
  if (obs.dims.size() == 1) return Shape::of1d(obs.dims[0]);
  if (obs.dims.size() == 2) return Shape::of2d(obs.dims[0], obs.dims[1]);
  throw std::invalid_argument("altproj: observation must lie on a 1D or 2D Fourier grid");
}

CVector fwd(const CVector& v, const Shape& s) { return s.ndim == 1 ? fft_forward(v) : fft2_forward(v, s); }
CVector inv(const CVector& v, const Shape& s) { return s.ndim == 1 ? fft_inverse(v) : fft2_inverse(v, s); }

/// In-support indicator of the constraint embedded into the solver grid.
BoolArray embedded_support(const RealSpaceConstraint& c, const Shape& grid) {
  BoolArray in = BoolArray::Constant(grid.count(), true);
  if (!c.support) return in;
  const Shape& s = c.support->shape();
  if (s.ndim != grid.ndim) throw std::invalid_argument("altproj: support dimensionality mismatch");
  for (int a = 0; a < s.ndim; ++a)
    if (s.dim(a) > grid.dim(a)) throw std::invalid_argument("altproj: support larger than grid");
  in.setConstant(false);
  if (grid.ndim == 1) {
    in.head(s.dim(0)) = c.support->flat();
  } else {
    for (Index i = 0; i < s.dim(0); ++i)
      in.segment(i * grid.dim(1), s.dim(1)) = c.support->flat().segment(i * s.dim(1), s.dim(1));
  }
  return in;
}

double magnitude_error(const CVector& spec, const RVector& sqrtY, const BoolArray& valid) {
  double e = 0.0;
  for (Index k = 0; k < spec.size(); ++k) {
    if (!valid(k)) continue;
    double d = std::abs(spec(k)) - sqrtY(k);
    e += d * d;
  }
  return e;
}

/// Imposes the measured magnitude on valid bins, keeping the current phase;
/// invalid bins keep the current Fourier value.
CVector impose_magnitude(const CVector& spec, const RVector& sqrtY, const BoolArray& valid) {
  CVector out = spec;
  for (Index k = 0; k < spec.size(); ++k) {
    if (!valid(k)) continue;
    double mag = std::abs(spec(k));
    out(k) = mag > 0.0 ? Complex(sqrtY(k) / mag) * spec(k) : Complex(sqrtY(k), 0.0);
  }
  return out;
}

CVector random_phase_start(const RVector& sqrtY, const BoolArray& valid, const Shape& grid,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
  CVector spec(sqrtY.size());
  for (Index k = 0; k < spec.size(); ++k) {
    double mag = valid(k) ? sqrtY(k) : 0.0;
    spec(k) = std::polar(mag, uni(rng));
  }
  return inv(spec, grid);
}

RVector sqrt_measurements(const Observation& obs) {
  RVector s(obs.y.size());
  for (Index k = 0; k < s.size(); ++k) {
    if (obs.valid(k) && obs.y(k) < 0)
      throw std::invalid_argument("altproj: negative measurement");
    s(k) = std::sqrt(std::max(0.0, obs.y(k)));
  }
  return s;
}

struct GaussianFilter {
  bool identity = true;
  RVector w;  // per-bin weight on the measurement grid
};

GaussianFilter make_filter(const Shape& grid, double alpha) {
  GaussianFilter f;
  if (std::isinf(alpha)) return f;
  f.identity = false;
  f.w.resize(grid.count());
  const double denom = 2.0 * alpha * alpha;
  if (grid.ndim == 1) {
    const Index m = grid.dim(0);
    for (Index k = 0; k < m; ++k) {
      double d = static_cast<double>(freq_distance(k, m));
      f.w(k) = std::exp(-d * d / denom);
    }
  } else {
    const Index m0 = grid.dim(0), m1 = grid.dim(1);
    for (Index i = 0; i < m0; ++i)
      for (Index j = 0; j < m1; ++j) {
        double d0 = static_cast<double>(freq_distance(i, m0));
        double d1 = static_cast<double>(freq_distance(j, m1));
        f.w(i * m1 + j) = std::exp(-(d0 * d0 + d1 * d1) / denom);
      }
  }
  return f;
}

}  // namespace

FienupVariant parse_fienup_variant(const std::string& name) {
  if (name == "er") return FienupVariant::ER;
  if (name == "hio") return FienupVariant::HIO;
  if (name == "io") return FienupVariant::IO;
  if (name == "oo") return FienupVariant::OO;
  throw std::invalid_argument("unknown Fienup variant: " + name);
}

void RealSpaceConstraint::validate() const {
  if (!support && !nonnegative && !realValued && !knownMagnitude)
    throw std::invalid_argument("RealSpaceConstraint: no active constraint");
}

void AltProjConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 2.0)) throw std::invalid_argument("AltProjConfig: beta out of range");
  if (maxIters < 1) throw std::invalid_argument("AltProjConfig: maxIters must be >= 1");
  if (epsilon < 0) throw std::invalid_argument("AltProjConfig: epsilon must be >= 0");
  if (ossStages < 1) throw std::invalid_argument("AltProjConfig: ossStages must be >= 1");
}

void write_trace_csv(const std::string& path, const IterateTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "iter,E\n";
  for (size_t i = 0; i < trace.errors.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", trace.errors[i]);
    os << i << ',' << buf << '\n';
  }
}

BoolArray violation_set(const Signal& estimate, const RealSpaceConstraint& constraint) {
  const BoolArray in = embedded_support(constraint, estimate.shape());
  BoolArray gamma(estimate.size());
  for (Index i = 0; i < estimate.size(); ++i) {
    const Complex v = estimate[i];
    bool bad = false;
    if (!in(i)) {
      bad = v != Complex(0.0, 0.0);
    } else {
      if (constraint.realValued && v.imag() != 0.0) bad = true;
      if (constraint.nonnegative && v.real() < 0.0) bad = true;
    }
    gamma(i) = bad;
  }
  return gamma;
}

Signal fienup_step(const Signal& current, const Signal& estimate,
                   const RealSpaceConstraint& constraint, FienupVariant variant, double beta) {
  if (current.shape() != estimate.shape())
    throw std::invalid_argument("fienup_step: shape mismatch");
  if (!(beta >= 0.0 && beta <= 2.0)) throw std::invalid_argument("fienup_step: beta out of range");
  const BoolArray gamma = violation_set(estimate, constraint);
  CVector next(current.size());
  for (Index i = 0; i < current.size(); ++i) {
    const Complex zi = current[i], ze = estimate[i];
    if (!gamma(i)) {
      next(i) = variant == FienupVariant::IO ? zi : ze;
    } else {
      switch (variant) {
        case FienupVariant::ER: next(i) = Complex(0.0, 0.0); break;
        case FienupVariant::HIO:
        case FienupVariant::IO: next(i) = zi - beta * ze; break;
        case FienupVariant::OO: next(i) = ze - beta * ze; break;
      }
    }
  }
  return Signal(current.shape(), std::move(next));
}

IterateTrace gs_solve(const Observation& obs, const Signal& knownMagnitude, const AltProjConfig& cfg) {
  cfg.validate();
  const Shape grid = obs_grid(obs);
  if (knownMagnitude.ndim() != grid.ndim)
    throw std::invalid_argument("gs_solve: magnitude dimensionality mismatch");
  for (int a = 0; a < grid.ndim; ++a)
    if (knownMagnitude.dim(a) > grid.dim(a))
      throw std::invalid_argument("gs_solve: magnitude larger than measurement grid");
  for (Index i = 0; i < knownMagnitude.size(); ++i)
    if (knownMagnitude[i].imag() != 0.0 || knownMagnitude[i].real() < 0.0)
      throw std::invalid_argument("gs_solve: knownMagnitude must be real nonnegative");
  const RVector sqrtY = sqrt_measurements(obs);
  if (sqrtY.sum() == 0.0) throw std::invalid_argument("gs_solve: zero measured magnitude everywhere");

  const Shape objShape = knownMagnitude.shape();
  CVector z;
  if (cfg.initialGuess) {
    z = embed(*cfg.initialGuess, grid).flat();
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    CVector z0(knownMagnitude.size());
    for (Index i = 0; i < z0.size(); ++i) z0(i) = std::polar(knownMagnitude[i].real(), uni(rng));
    z = embed(Signal(objShape, std::move(z0)), grid).flat();
  }

  IterateTrace trace;
  for (Index it = 0; it < cfg.maxIters; ++it) {
    CVector spec = fwd(z, grid);
    const double e = magnitude_error(spec, sqrtY, obs.valid);
    trace.errors.push_back(e);
    trace.iterations = it + 1;
    if (e <= cfg.epsilon) {
      trace.converged = true;
      break;
    }
    if (it == cfg.maxIters - 1) break;
    CVector est = inv(impose_magnitude(spec, sqrtY, obs.valid), grid);
    Signal cropped = crop(Signal(grid, std::move(est)), objShape);
    CVector znext(cropped.size());
    for (Index i = 0; i < cropped.size(); ++i) {
      const double mag = std::abs(cropped[i]);
      znext(i) = mag > 0.0 ? Complex(knownMagnitude[i].real() / mag) * cropped[i]
                           : Complex(knownMagnitude[i].real(), 0.0);
    }
    z = embed(Signal(objShape, std::move(znext)), grid).flat();
  }
  trace.reconstruction = crop(Signal(grid, z), objShape);
  return trace;
}

namespace {

IterateTrace fienup_like_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                               const AltProjConfig& cfg, FienupVariant variant, bool oss) {
  cfg.validate();
  constraint.validate();
  if (constraint.knownMagnitude)
    throw std::invalid_argument("fienup_solve: knownMagnitude constraints belong to gs_solve");
  const Shape grid = obs_grid(obs);
  const RVector sqrtY = sqrt_measurements(obs);
  if (sqrtY.sum() == 0.0) throw std::invalid_argument("fienup_solve: zero measured magnitude everywhere");
  const Shape objShape = constraint.support ? constraint.support->shape() : grid;

  CVector z = cfg.initialGuess ? embed(*cfg.initialGuess, grid).flat()
                               : random_phase_start(sqrtY, obs.valid, grid, cfg.seed);
  if (constraint.realValued) z = z.real().cast<Complex>();

  // The image estimate is the support-projected iterate; off-support samples
  // of the HIO input carry feedback content and are not part of the image.
  const BoolArray inSupport = embedded_support(constraint, grid);
  auto project = [&](const CVector& v) {
    CVector out = v;
    for (Index i = 0; i < out.size(); ++i)
      if (!inSupport(i)) out(i) = Complex(0, 0);
    return out;
  };

  // OSS filter schedule: one filter per stage, widths linear from the initial
  // to the final alpha.
  std::vector<GaussianFilter> filters;
  if (oss) {
    const double m = static_cast<double>(std::max(grid.dim(0), grid.ndim == 2 ? grid.dim(1) : 1));
    double a0 = cfg.ossAlphaRange.first, a1 = cfg.ossAlphaRange.second;
    if (a0 == 0.0 && a1 == 0.0) {
      a0 = 2.0 * m;
      a1 = m / 10.0;
    }
    for (int s = 0; s < cfg.ossStages; ++s) {
      double t = cfg.ossStages == 1 ? 0.0 : static_cast<double>(s) / (cfg.ossStages - 1);
      double alpha = a0 == a1 ? a0 : a0 + (a1 - a0) * t;
      filters.push_back(make_filter(grid, alpha));
    }
  }

  IterateTrace trace;
  double bestE = std::numeric_limits<double>::infinity();
  CVector zEst = project(z);
  CVector bestEst = zEst;
  for (Index it = 0; it < cfg.maxIters; ++it) {
    zEst = project(z);
    const double e = magnitude_error(fwd(zEst, grid), sqrtY, obs.valid);
    trace.errors.push_back(e);
    trace.iterations = it + 1;
    if (e < bestE) {
      bestE = e;
      bestEst = zEst;
    }
    if (e <= cfg.epsilon) {
      trace.converged = true;
      break;
    }
    if (it == cfg.maxIters - 1) break;

    CVector spec = fwd(z, grid);
    CVector est = inv(impose_magnitude(spec, sqrtY, obs.valid), grid);
    if (constraint.realValued) est = est.real().cast<Complex>();
    const Signal estimate(grid, std::move(est));
    const Signal currentSig(grid, z);
    Signal corrected = fienup_step(currentSig, estimate, constraint, variant, cfg.beta);

    if (oss) {
      const int stage = std::min<int>(cfg.ossStages - 1,
                                      static_cast<int>((it * cfg.ossStages) / cfg.maxIters));
      const GaussianFilter& f = filters[static_cast<size_t>(stage)];
      if (!f.identity) {
        CVector filt = fwd(corrected.flat(), grid);
        filt.array() *= f.w.array().cast<Complex>();
        CVector smooth = inv(filt, grid);
        if (constraint.realValued) smooth = smooth.real().cast<Complex>();
        const BoolArray gamma = violation_set(estimate, constraint);
        CVector merged = corrected.flat();
        for (Index i = 0; i < merged.size(); ++i)
          if (gamma(i)) merged(i) = smooth(i);
        corrected = Signal(grid, std::move(merged));
      }
    }
    z = corrected.flat();
  }

  const CVector& finalEst = oss ? bestEst : zEst;
  trace.reconstruction = crop(Signal(grid, finalEst), objShape);
  return trace;
}

}  // namespace

IterateTrace fienup_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                          const AltProjConfig& cfg, FienupVariant variant) {
  return fienup_like_solve(obs, constraint, cfg, variant, false);
}

IterateTrace hio_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                       const AltProjConfig& cfg) {
  return fienup_like_solve(obs, constraint, cfg, FienupVariant::HIO, false);
}

IterateTrace oss_solve(const Observation& obs, const RealSpaceConstraint& constraint,
                       const AltProjConfig& cfg) {
  return fienup_like_solve(obs, constraint, cfg, FienupVariant::HIO, true);
}

SupportMask shrinkwrap_update(const Signal& current, double smoothingWidth, double thresholdFrac) {
  if (!(thresholdFrac > 0.0 && thresholdFrac < 1.0))
    throw std::invalid_argument("shrinkwrap_update: thresholdFrac must lie in (0,1)");
  if (current.norm() == 0.0) throw std::invalid_argument("shrinkwrap_update: all-zero signal");
  if (smoothingWidth < 0.0) throw std::invalid_argument("shrinkwrap_update: negative smoothing width");

  const Shape& shape = current.shape();
  CVector mag(current.size());
  for (Index i = 0; i < mag.size(); ++i) mag(i) = Complex(std::abs(current[i]), 0.0);

  RVector smooth(current.size());
  if (smoothingWidth == 0.0) {
    smooth = mag.real();
  } else {
    // Circular Gaussian smoothing via the exact spectral transfer
    // exp(-2 pi^2 w^2 f^2), f in cycles per sample.
    CVector spec = fwd(mag, shape);
    const double c = 2.0 * kPi * kPi * smoothingWidth * smoothingWidth;
    if (shape.ndim == 1) {
      const Index m = shape.dim(0);
      for (Index k = 0; k < m; ++k) {
        double f = static_cast<double>(freq_distance(k, m)) / static_cast<double>(m);
        spec(k) *= std::exp(-c * f * f);
      }
    } else {
      const Index m0 = shape.dim(0), m1 = shape.dim(1);
      for (Index i = 0; i < m0; ++i)
        for (Index j = 0; j < m1; ++j) {
          double f0 = static_cast<double>(freq_distance(i, m0)) / static_cast<double>(m0);
          double f1 = static_cast<double>(freq_distance(j, m1)) / static_cast<double>(m1);
          spec(i * m1 + j) *= std::exp(-c * (f0 * f0 + f1 * f1));
        }
    }
    smooth = inv(spec, shape).real();
  }

  const double cutoff = thresholdFrac * smooth.maxCoeff();
  BoolArray mask(current.size());
  for (Index i = 0; i < mask.size(); ++i) mask(i) = smooth(i) >= cutoff;
  return SupportMask(shape, std::move(mask));
}

}  // namespace phasekit
