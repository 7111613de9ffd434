#pragma once

#include "phasekit/types.hpp"

#include <optional>
#include <vector>

namespace phasekit {

/// A complex-valued 1D or 2D sample array. Values are stored flattened
/// row-major; entries are validated to be finite on construction and the
/// object is immutable afterwards.
class Signal {
 public:
  Signal() : shape_(Shape::of1d(0)) {}
  Signal(Shape shape, CVector values);

  static Signal zeros(Shape shape);
  static Signal from1d(CVector values);
  static Signal from1d_real(const RVector& values);
  static Signal from2d(const CMatrixRM& grid);

  const Shape& shape() const { return shape_; }
  int ndim() const { return shape_.ndim; }
  Index size() const { return values_.size(); }
  Index dim(int axis) const { return shape_.dim(axis); }

  const CVector& flat() const { return values_; }
  Complex operator[](Index i) const { return values_(i); }
  Complex at(Index i, Index j) const { return values_(i * shape_.dim(1) + j); }

  Eigen::Map<const CMatrixRM> as2d() const;

  double norm() const { return values_.norm(); }
  bool is_real(double tol = 0.0) const;

 private:
  Shape shape_;
  CVector values_;
};

/// Per-sample in-support indicator with the shape of the signal it constrains.
class SupportMask {
 public:
  SupportMask(Shape shape, BoolArray mask);

  static SupportMask all_true(Shape shape);
  /// Mask from nonzero samples of a signal.
  static SupportMask from_nonzero(const Signal& s);

  const Shape& shape() const { return shape_; }
  const BoolArray& flat() const { return mask_; }
  Index count_true() const { return mask_.count(); }
  bool operator[](Index i) const { return mask_(i); }

  /// Chebyshev (square structuring element) dilation by `radius` samples.
  SupportMask dilated(Index radius) const;

 private:
  Shape shape_;
  BoolArray mask_;
};

/// A Fourier-magnitude-preserving transformation: conjugate inversion,
/// then a per-axis circular shift, then a global phase factor (applied in
/// that order). Shifts are circular on the padded measurement grid.
struct AmbiguityTransform {
  double globalPhase = 0.0;             // radians
  std::vector<long> shift;              // one entry per axis, in samples
  bool conjugateFlip = false;

  static AmbiguityTransform identity(int ndim) {
    return AmbiguityTransform{0.0, std::vector<long>(static_cast<size_t>(ndim), 0), false};
  }
  /// Transform undoing this one on the same padded grid.
  AmbiguityTransform inverse() const;
};

/// Default padded extent per axis (2N-1) tying spatial-shift equivalence to
/// the oversampled Fourier magnitude.
Shape padded_shape(const Shape& s);

/// Zero-pad into the leading block of `target` / crop back to `target`.
Signal embed(const Signal& x, const Shape& target);
Signal crop(const Signal& x, const Shape& target);

/// Applies `t` to `x` on the padded circular grid (`grid` per-axis extents;
/// defaults to 2N-1). The result is cropped back to the shape of `x` whenever
/// every sample outside that leading block is exactly zero; otherwise the
/// padded-grid signal is returned.
Signal apply_ambiguity(const Signal& x, const AmbiguityTransform& t);
Signal apply_ambiguity(const Signal& x, const AmbiguityTransform& t, const Shape& grid);

struct AlignmentResult {
  Signal aligned;
  AmbiguityTransform transform;  // shifts are modulo the common padded grid
  double residual = 0.0;         // ||aligned - reference||_2 / ||reference||_2
};

/// Searches exhaustively over circular shifts on the common padded grid and
/// over conjugate inversion, with the globally optimal phase per candidate
/// computed in closed form, and returns the member of the ambiguity class of
/// `candidate` closest to `reference`.
AlignmentResult align_to_reference(const Signal& candidate, const Signal& reference);

}  // namespace phasekit
