#pragma once

// Independent test oracles. Everything here evaluates definitions directly
// (plain summation, exhaustive search) and must stay decoupled from the
// library's FFT-based implementation paths.

#include "phasekit/signal.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracles {

using phasekit::Complex;
using phasekit::CVector;
using phasekit::Index;
using phasekit::RVector;
using phasekit::Signal;

/// Direct O(MN) evaluation of X[k] = sum_n x[n] e^{-j2pi kn/M}.
inline CVector direct_dft(const CVector& x, Index m) {
  CVector out(m);
  const double w = -2.0 * std::numbers::pi / static_cast<double>(m);
  for (Index k = 0; k < m; ++k) {
    Complex acc(0, 0);
    for (Index n = 0; n < x.size(); ++n) acc += x(n) * std::polar(1.0, w * static_cast<double>(k * n));
    out(k) = acc;
  }
  return out;
}

/// Direct 2D DFT of a row-major grid onto an (m0 x m1) grid.
inline CVector direct_dft2(const CVector& x, Index r, Index c, Index m0, Index m1) {
  CVector out(m0 * m1);
  const double w0 = -2.0 * std::numbers::pi / static_cast<double>(m0);
  const double w1 = -2.0 * std::numbers::pi / static_cast<double>(m1);
  for (Index k0 = 0; k0 < m0; ++k0)
    for (Index k1 = 0; k1 < m1; ++k1) {
      Complex acc(0, 0);
      for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
          acc += x(i * c + j) * std::polar(1.0, w0 * static_cast<double>(k0 * i) +
                                                    w1 * static_cast<double>(k1 * j));
      out(k0 * m1 + k1) = acc;
    }
  return out;
}

/// DFT of an autocorrelation sequence indexed m = -(N-1)..N-1 evaluated on
/// the length-(2N-1) circular grid.
inline CVector dft_of_autocorrelation(const CVector& g) {
  const Index m = g.size();
  const Index nMinus1 = (m - 1) / 2;
  CVector wrapped = CVector::Zero(m);
  for (Index idx = 0; idx < m; ++idx) {
    Index lag = idx - nMinus1;
    wrapped(((lag % m) + m) % m) = g(idx);
  }
  return direct_dft(wrapped, m);
}

/// Exhaustive alignment oracle: all circular shifts on the common padded
/// grid x {flip, no flip}, optimal phase per candidate in closed form.
inline double align_residual_oracle(const Signal& candidate, const Signal& reference) {
  using phasekit::AmbiguityTransform;
  using phasekit::Shape;
  Shape grid = reference.shape();
  for (int a = 0; a < grid.ndim; ++a) {
    Index lo = std::min(reference.dim(a), candidate.dim(a));
    Index hi = std::max(reference.dim(a), candidate.dim(a));
    grid.dims[static_cast<size_t>(a)] = std::max(2 * lo - 1, hi);
  }
  const CVector r = phasekit::embed(reference, grid).flat();
  const double rn = r.norm();
  double best = std::numeric_limits<double>::infinity();
  std::vector<long> sh(static_cast<size_t>(grid.ndim), 0);
  const Index s0max = grid.dim(0);
  const Index s1max = grid.ndim == 2 ? grid.dim(1) : 1;
  for (int flip = 0; flip < 2; ++flip)
    for (Index s0 = 0; s0 < s0max; ++s0)
      for (Index s1 = 0; s1 < s1max; ++s1) {
        sh[0] = static_cast<long>(s0);
        if (grid.ndim == 2) sh[1] = static_cast<long>(s1);
        Signal moved = phasekit::apply_ambiguity(candidate, AmbiguityTransform{0.0, sh, flip != 0}, grid);
        const CVector c = phasekit::embed(moved, grid).flat();
        const Complex inner = r.dot(c);  // conj(r) . c
        double num2 = c.squaredNorm() + r.squaredNorm() - 2.0 * std::abs(inner);
        best = std::min(best, std::sqrt(std::max(0.0, num2)) / rn);
      }
  return best;
}

/// Central finite-difference gradient of a scalar function.
template <typename F>
RVector fd_gradient(F&& f, const RVector& x, double h = 1e-5) {
  RVector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    RVector xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline CVector random_complex(Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CVector x(n);
  for (Index i = 0; i < n; ++i) x(i) = Complex(gauss(gen), gauss(gen));
  return x;
}

inline RVector random_real(Index n, std::mt19937_64& gen) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RVector x(n);
  for (Index i = 0; i < n; ++i) x(i) = gauss(gen);
  return x;
}

}  // namespace oracles
