#include "phasekit/forward.hpp"

#include "phasekit/fft.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr double kPi = std::numbers::pi;

Shape obs_shape(const std::vector<Index>& dims) {
  if (dims.size() == 1) return Shape::of1d(dims[0]);
  if (dims.size() == 2) return Shape::of2d(dims[0], dims[1]);
  throw std::invalid_argument("observation dims must be 1D or 2D for this operation");
}

RVector grid_frequencies(Index n, double spacing) {
  RVector f(n);
  for (Index k = 0; k < n; ++k) {
    Index kk = k <= n / 2 ? k : k - n;
    f(k) = static_cast<double>(kk) / (static_cast<double>(n) * spacing);
  }
  return f;
}

}  // namespace

double PropagationConfig::fresnel_number() const {
  if (wavelength <= 0 || distance <= 0 || objectRadius <= 0)
    throw std::invalid_argument("fresnel_number: wavelength, distance and objectRadius must be positive");
  return objectRadius * objectRadius / (wavelength * distance);
}

void validate_model(const MeasurementModel& model, const Shape& signalShape) {
  if (const auto* f = std::get_if<OversampledFourier>(&model)) {
    if (f->grid.ndim != signalShape.ndim)
      throw std::invalid_argument("OversampledFourier: grid dimensionality mismatch");
    for (int a = 0; a < f->grid.ndim; ++a)
      if (f->grid.dim(a) < signalShape.dim(a))
        throw std::invalid_argument("OversampledFourier: M must be >= N per axis");
  } else if (const auto* g = std::get_if<GeneralLinear>(&model)) {
    if (g->vectors.rows() < 1) throw std::invalid_argument("GeneralLinear: need k >= 1 vectors");
    if (g->vectors.cols() != signalShape.count())
      throw std::invalid_argument("GeneralLinear: vector length mismatch");
  } else if (const auto* l = std::get_if<LowPassFourier>(&model)) {
    if (l->grid.ndim != signalShape.ndim)
      throw std::invalid_argument("LowPassFourier: grid dimensionality mismatch");
    for (int a = 0; a < l->grid.ndim; ++a)
      if (l->grid.dim(a) < signalShape.dim(a))
        throw std::invalid_argument("LowPassFourier: M must be >= N per axis");
    if (!(l->cutoff > 0.0) || l->cutoff > 0.5)
      throw std::invalid_argument("LowPassFourier: cutoff must lie in (0, Nyquist]");
  } else if (const auto* m = std::get_if<MultiPlane>(&model)) {
    if (signalShape.ndim != 2) throw std::invalid_argument("MultiPlane: 2D fields only");
    if (m->distances.empty()) throw std::invalid_argument("MultiPlane: need at least one plane");
    if (m->wavelength <= 0 || m->sampleSpacing <= 0)
      throw std::invalid_argument("MultiPlane: wavelength and spacing must be positive");
  }
}

Signal oversampled_dft(const Signal& x, const Shape& grid) {
  if (grid.ndim != x.ndim()) throw std::invalid_argument("oversampled_dft: grid ndim mismatch");
  for (int a = 0; a < grid.ndim; ++a)
    if (grid.dim(a) < x.dim(a)) throw std::invalid_argument("oversampled_dft: M < N");
  const Signal padded = embed(x, grid);
  CVector spec = grid.ndim == 1 ? fft_forward(padded.flat()) : fft2_forward(padded.flat(), grid);
  return Signal(grid, std::move(spec));
}

Signal oversampled_dft(const Signal& x, Index m) {
  if (x.ndim() != 1) throw std::invalid_argument("oversampled_dft(m): 1D signals only");
  return oversampled_dft(x, Shape::of1d(m));
}

CVector autocorrelation(const Signal& x) {
  if (x.size() == 0) throw std::invalid_argument("autocorrelation: empty signal");
  if (x.ndim() != 1) throw std::invalid_argument("autocorrelation: 1D signals only");
  const Index n = x.size();
  // Direct summation keeps integer fixtures exact. Terms where i - m falls
  // outside [0, N) vanish under the zero padding.
  CVector g = CVector::Zero(2 * n - 1);
  for (Index m = -(n - 1); m <= n - 1; ++m) {
    Complex acc(0, 0);
    for (Index i = std::max<Index>(0, m); i < std::min(n, n + m); ++i)
      acc += x[i] * std::conj(x[i - m]);
    g(m + n - 1) = acc;
  }
  return g;
}

Observation intensity(const Signal& x, const MeasurementModel& model) {
  validate_model(model, x.shape());
  Observation obs;
  if (const auto* f = std::get_if<OversampledFourier>(&model)) {
    Signal spec = oversampled_dft(x, f->grid);
    obs.y = spec.flat().cwiseAbs2();
    obs.dims.assign({f->grid.dim(0)});
    if (f->grid.ndim == 2) obs.dims.push_back(f->grid.dim(1));
  } else if (const auto* g = std::get_if<GeneralLinear>(&model)) {
    CVector inner = g->vectors.conjugate() * x.flat();
    obs.y = inner.cwiseAbs2();
    obs.dims.assign({g->vectors.rows()});
  } else if (const auto* l = std::get_if<LowPassFourier>(&model)) {
    Signal spec = oversampled_dft(x, l->grid);
    CVector s = spec.flat();
    if (l->grid.ndim == 1) {
      const Index m = l->grid.dim(0);
      for (Index k = 0; k < m; ++k)
        if (static_cast<double>(freq_distance(k, m)) / static_cast<double>(m) > l->cutoff) s(k) = 0;
    } else {
      const Index m0 = l->grid.dim(0), m1 = l->grid.dim(1);
      for (Index i = 0; i < m0; ++i)
        for (Index j = 0; j < m1; ++j) {
          double f0 = static_cast<double>(freq_distance(i, m0)) / static_cast<double>(m0);
          double f1 = static_cast<double>(freq_distance(j, m1)) / static_cast<double>(m1);
          if (std::hypot(f0, f1) > l->cutoff) s(i * m1 + j) = 0;
        }
    }
    obs.y = s.cwiseAbs2();
    obs.dims.assign({l->grid.dim(0)});
    if (l->grid.ndim == 2) obs.dims.push_back(l->grid.dim(1));
  } else {
    const auto& mp = std::get<MultiPlane>(model);
    const Index per = x.size();
    obs.y.resize(per * static_cast<Index>(mp.distances.size()));
    for (size_t p = 0; p < mp.distances.size(); ++p) {
      PropagationConfig cfg{mp.wavelength, mp.distances[p], mp.sampleSpacing, 0.0};
      Signal field = propagate(x, cfg);
      obs.y.segment(static_cast<Index>(p) * per, per) = field.flat().cwiseAbs2();
    }
    obs.dims.assign({static_cast<Index>(mp.distances.size()), per});
  }
  obs.valid = BoolArray::Constant(obs.y.size(), true);
  return obs;
}

Signal propagate(const Signal& field, const PropagationConfig& cfg) {
  if (field.ndim() != 2) throw std::invalid_argument("propagate: 2D fields only");
  if (cfg.wavelength <= 0) throw std::invalid_argument("propagate: nonpositive wavelength");
  if (cfg.sampleSpacing <= 0) throw std::invalid_argument("propagate: nonpositive sample spacing");
  if (cfg.distance == 0.0) return field;  // T == 1

  const Index r = field.dim(0), c = field.dim(1);
  const double k = 2.0 * kPi / cfg.wavelength;
  const RVector fx = grid_frequencies(c, cfg.sampleSpacing);
  const RVector fy = grid_frequencies(r, cfg.sampleSpacing);

  CVector spec = fft2_forward(field.flat(), field.shape());
  Eigen::Map<CMatrixRM> m(spec.data(), r, c);
  for (Index i = 0; i < r; ++i) {
    const double ky = 2.0 * kPi * fy(i);
    for (Index j = 0; j < c; ++j) {
      const double kx = 2.0 * kPi * fx(j);
      const double arg = k * k - kx * kx - ky * ky;
      Complex t;
      if (arg >= 0.0) {
        t = std::polar(1.0, -cfg.distance * std::sqrt(arg));
      } else {
        t = std::exp(-cfg.distance * std::sqrt(-arg));  // decaying branch
      }
      m(i, j) *= t;
    }
  }
  return Signal(field.shape(), fft2_inverse(spec, field.shape()));
}

Observation add_poisson_noise(const Observation& obs, double photonBudget, std::uint64_t seed) {
  if (!(photonBudget > 0)) throw std::invalid_argument("add_poisson_noise: photonBudget must be positive");
  if ((obs.y.array() < 0).any()) throw std::invalid_argument("add_poisson_noise: negative entries");
  Observation out = obs;
  const double total = obs.y.sum();
  if (total == 0.0) return out;
  const double scale = photonBudget / total;
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < out.y.size(); ++i) {
    const double mean = obs.y(i) * scale;
    if (mean == 0.0) {
      out.y(i) = 0.0;
      continue;
    }
    std::poisson_distribution<long long> d(mean);
    out.y(i) = static_cast<double>(d(rng)) / scale;
  }
  out.noise = NoiseMeta{NoiseKind::Poisson, photonBudget};
  return out;
}

Observation apply_missing_center(const Observation& obs, Index radius) {
  if (radius < 0) throw std::invalid_argument("apply_missing_center: negative radius");
  if (radius == 0) return obs;
  const Shape grid = obs_shape(obs.dims);
  for (int a = 0; a < grid.ndim; ++a)
    if (radius > grid.dim(a) / 2)
      throw std::invalid_argument("apply_missing_center: radius exceeds grid half-extent");
  Observation out = obs;
  if (grid.ndim == 1) {
    const Index m = grid.dim(0);
    for (Index k = 0; k < m; ++k)
      if (freq_distance(k, m) <= radius) out.valid(k) = false;
  } else {
    const Index m0 = grid.dim(0), m1 = grid.dim(1);
    for (Index i = 0; i < m0; ++i)
      for (Index j = 0; j < m1; ++j)
        if (std::max(freq_distance(i, m0), freq_distance(j, m1)) <= radius)
          out.valid(i * m1 + j) = false;
  }
  return out;
}

}  // namespace phasekit
