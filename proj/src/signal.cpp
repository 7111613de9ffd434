#include "phasekit/signal.hpp"

#include "phasekit/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace phasekit {

namespace {

void check_shape(const Shape& s) {
  if (s.ndim != 1 && s.ndim != 2) throw std::invalid_argument("Signal: ndim must be 1 or 2");
  if (s.dims[0] < 1 || (s.ndim == 2 && s.dims[1] < 1))
    throw std::invalid_argument("Signal: dimensions must be >= 1");
}

Shape grid_or_default(const Signal& x, const Shape* grid) {
  if (!grid) return padded_shape(x.shape());
  if (grid->ndim != x.ndim()) throw std::invalid_argument("apply_ambiguity: grid ndim mismatch");
  for (int a = 0; a < grid->ndim; ++a)
    if (grid->dim(a) < x.dim(a))
      throw std::invalid_argument("apply_ambiguity: grid smaller than signal");
  return *grid;
}

// Crop back to `inner` if everything outside the leading block is exactly
// zero. Exactness is safe: transforms only permute and rescale samples.
Signal crop_if_contained(CVector v, const Shape& grid, const Shape& inner) {
  bool contained = true;
  if (grid.ndim == 1) {
    for (Index i = inner.dim(0); i < grid.dim(0) && contained; ++i)
      contained = v(i) == Complex(0.0, 0.0);
  } else {
    Eigen::Map<const CMatrixRM> m(v.data(), grid.dim(0), grid.dim(1));
    for (Index i = 0; i < grid.dim(0) && contained; ++i)
      for (Index j = 0; j < grid.dim(1) && contained; ++j)
        if (i >= inner.dim(0) || j >= inner.dim(1)) contained = m(i, j) == Complex(0.0, 0.0);
  }
  Signal padded(grid, std::move(v));
  return contained ? crop(padded, inner) : padded;
}

}  // namespace

Signal::Signal(Shape shape, CVector values) : shape_(shape), values_(std::move(values)) {
  check_shape(shape_);
  if (values_.size() != shape_.count())
    throw std::invalid_argument("Signal: value count does not match shape");
  if (!values_.allFinite()) throw std::invalid_argument("Signal: non-finite entries");
}

Signal Signal::zeros(Shape shape) {
  check_shape(shape);
  return Signal(shape, CVector::Zero(shape.count()));
}

Signal Signal::from1d(CVector values) {
  const Shape s = Shape::of1d(values.size());
  return Signal(s, std::move(values));
}

Signal Signal::from1d_real(const RVector& values) {
  return Signal(Shape::of1d(values.size()), values.cast<Complex>());
}

Signal Signal::from2d(const CMatrixRM& grid) {
  Shape s = Shape::of2d(grid.rows(), grid.cols());
  return Signal(s, Eigen::Map<const CVector>(grid.data(), s.count()));
}

Eigen::Map<const CMatrixRM> Signal::as2d() const {
  if (shape_.ndim != 2) throw std::invalid_argument("Signal::as2d: signal is 1D");
  return Eigen::Map<const CMatrixRM>(values_.data(), shape_.dim(0), shape_.dim(1));
}

bool Signal::is_real(double tol) const {
  for (Index i = 0; i < values_.size(); ++i)
    if (std::abs(values_(i).imag()) > tol) return false;
  return true;
}

SupportMask::SupportMask(Shape shape, BoolArray mask) : shape_(shape), mask_(std::move(mask)) {
  check_shape(shape_);
  if (mask_.size() != shape_.count())
    throw std::invalid_argument("SupportMask: size does not match shape");
  if (mask_.count() == 0) throw std::invalid_argument("SupportMask: no in-support samples");
}

SupportMask SupportMask::all_true(Shape shape) {
  return SupportMask(shape, BoolArray::Constant(shape.count(), true));
}

SupportMask SupportMask::from_nonzero(const Signal& s) {
  BoolArray m(s.size());
  for (Index i = 0; i < s.size(); ++i) m(i) = s[i] != Complex(0.0, 0.0);
  return SupportMask(s.shape(), std::move(m));
}

SupportMask SupportMask::dilated(Index radius) const {
  if (radius < 0) throw std::invalid_argument("SupportMask::dilated: negative radius");
  if (radius == 0) return *this;
  BoolArray out = BoolArray::Constant(mask_.size(), false);
  if (shape_.ndim == 1) {
    const Index n = shape_.dim(0);
    for (Index i = 0; i < n; ++i) {
      if (!mask_(i)) continue;
      for (Index d = -radius; d <= radius; ++d) {
        Index j = i + d;
        if (j >= 0 && j < n) out(j) = true;
      }
    }
  } else {
    const Index r = shape_.dim(0), c = shape_.dim(1);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) {
        if (!mask_(i * c + j)) continue;
        for (Index di = -radius; di <= radius; ++di)
          for (Index dj = -radius; dj <= radius; ++dj) {
            Index a = i + di, b = j + dj;
            if (a >= 0 && a < r && b >= 0 && b < c) out(a * c + b) = true;
          }
      }
  }
  return SupportMask(shape_, std::move(out));
}

AmbiguityTransform AmbiguityTransform::inverse() const {
  // With the flip-shift-phase composition, flipped transforms are involutions.
  if (conjugateFlip) return *this;
  AmbiguityTransform inv = *this;
  inv.globalPhase = -globalPhase;
  for (auto& s : inv.shift) s = -s;
  return inv;
}

Shape padded_shape(const Shape& s) {
  Shape p = s;
  p.dims[0] = 2 * s.dims[0] - 1;
  if (s.ndim == 2) p.dims[1] = 2 * s.dims[1] - 1;
  return p;
}

Signal embed(const Signal& x, const Shape& target) {
  if (target.ndim != x.ndim()) throw std::invalid_argument("embed: ndim mismatch");
  for (int a = 0; a < target.ndim; ++a)
    if (target.dim(a) < x.dim(a)) throw std::invalid_argument("embed: target smaller than signal");
  if (target == x.shape()) return x;
  CVector v = CVector::Zero(target.count());
  if (target.ndim == 1) {
    v.head(x.size()) = x.flat();
  } else {
    Eigen::Map<CMatrixRM> m(v.data(), target.dim(0), target.dim(1));
    m.topLeftCorner(x.dim(0), x.dim(1)) = x.as2d();
  }
  return Signal(target, std::move(v));
}

Signal crop(const Signal& x, const Shape& target) {
  if (target.ndim != x.ndim()) throw std::invalid_argument("crop: ndim mismatch");
  for (int a = 0; a < target.ndim; ++a)
    if (target.dim(a) > x.dim(a)) throw std::invalid_argument("crop: target larger than signal");
  if (target == x.shape()) return x;
  if (target.ndim == 1) return Signal(target, x.flat().head(target.dim(0)));
  CMatrixRM block = x.as2d().topLeftCorner(target.dim(0), target.dim(1));
  return Signal::from2d(block);
}

Signal apply_ambiguity(const Signal& x, const AmbiguityTransform& t) {
  return apply_ambiguity(x, t, padded_shape(x.shape()));
}

Signal apply_ambiguity(const Signal& x, const AmbiguityTransform& t, const Shape& grid_in) {
  if (static_cast<int>(t.shift.size()) != x.ndim())
    throw std::invalid_argument("apply_ambiguity: shift arity does not match signal dimensionality");
  const Shape grid = grid_or_default(x, &grid_in);
  const Signal padded = embed(x, grid);
  const Complex phase = std::polar(1.0, t.globalPhase);

  auto wrap = [](Index i, Index n) { return ((i % n) + n) % n; };

  CVector out(grid.count());
  if (grid.ndim == 1) {
    const Index m = grid.dim(0);
    const Index s = wrap(t.shift[0], m);
    for (Index n = 0; n < m; ++n) {
      Index src = wrap(n - s, m);
      Complex v = t.conjugateFlip ? std::conj(padded[wrap(-src, m)]) : padded[src];
      out(n) = phase * v;
    }
  } else {
    const Index m0 = grid.dim(0), m1 = grid.dim(1);
    const Index s0 = wrap(t.shift[0], m0), s1 = wrap(t.shift[1], m1);
    auto src2d = padded.as2d();
    Eigen::Map<CMatrixRM> dst(out.data(), m0, m1);
    for (Index i = 0; i < m0; ++i)
      for (Index j = 0; j < m1; ++j) {
        Index a = wrap(i - s0, m0), b = wrap(j - s1, m1);
        Complex v = t.conjugateFlip ? std::conj(src2d(wrap(-a, m0), wrap(-b, m1))) : src2d(a, b);
        dst(i, j) = phase * v;
      }
  }
  return crop_if_contained(std::move(out), grid, x.shape());
}

AlignmentResult align_to_reference(const Signal& candidate, const Signal& reference) {
  if (candidate.ndim() != reference.ndim())
    throw std::invalid_argument("align_to_reference: dimensionality mismatch");
  const double refNorm = reference.norm();
  if (refNorm == 0.0) throw std::invalid_argument("align_to_reference: zero reference norm");

  // Common circular grid. A mismatched pair means one side already lives on
  // the padded grid of the other, so the circle is the larger extent; equal
  // extents get the usual 2N-1 padding.
  Shape grid = reference.shape();
  for (int a = 0; a < grid.ndim; ++a) {
    Index lo = std::min(reference.dim(a), candidate.dim(a));
    Index hi = std::max(reference.dim(a), candidate.dim(a));
    grid.dims[static_cast<size_t>(a)] = std::max(2 * lo - 1, hi);
  }

  const Signal ref = embed(reference, grid);
  const Signal cand = embed(candidate, grid);

  auto transform = [&](const CVector& v) {
    return grid.ndim == 1 ? fft_forward(v) : fft2_forward(v, grid);
  };
  auto inverse = [&](const CVector& v) {
    return grid.ndim == 1 ? fft_inverse(v) : fft2_inverse(v, grid);
  };

  const CVector refSpec = transform(ref.flat());

  double bestAbs = -1.0;
  Complex bestInner(0, 0);
  bool bestFlip = false;
  std::vector<long> bestShift(static_cast<size_t>(grid.ndim), 0);

  auto wrap = [](Index i, Index n) { return ((i % n) + n) % n; };

  for (int flip = 0; flip < 2; ++flip) {
    Signal flipped = flip
        ? apply_ambiguity(cand, AmbiguityTransform{0.0, std::vector<long>(static_cast<size_t>(grid.ndim), 0), true}, grid)
        : cand;
    flipped = embed(flipped, grid);
    // q'[u] = sum_n conj(ref[n-u]) c[n]; the inner product for shift s is
    // q'[-s mod M]. One FFT cross-correlation gives all shifts.
    CVector prod = transform(flipped.flat()).cwiseProduct(refSpec.conjugate());
    CVector qp = inverse(prod);
    for (Index u = 0; u < grid.count(); ++u) {
      double a = std::abs(qp(u));
      if (a > bestAbs + 1e-15 * (1.0 + bestAbs)) {
        bestAbs = a;
        bestInner = qp(u);
        bestFlip = flip != 0;
        if (grid.ndim == 1) {
          bestShift[0] = static_cast<long>(wrap(-u, grid.dim(0)));
        } else {
          Index i = u / grid.dim(1), j = u % grid.dim(1);
          bestShift[0] = static_cast<long>(wrap(-i, grid.dim(0)));
          bestShift[1] = static_cast<long>(wrap(-j, grid.dim(1)));
        }
      }
    }
  }

  AlignmentResult res;
  res.transform = AmbiguityTransform{bestAbs > 0 ? -std::arg(bestInner) : 0.0, bestShift, bestFlip};
  res.aligned = apply_ambiguity(cand, res.transform, grid);
  // direct evaluation; the correlation form cancels catastrophically near 0
  res.residual = (embed(res.aligned, grid).flat() - ref.flat()).norm() / refNorm;
  return res;
}

}  // namespace phasekit
