#include "phasekit/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <stdexcept>

namespace phasekit {

namespace {

Eigen::FFT<double>& plan() {
  thread_local Eigen::FFT<double> f;
  return f;
}

}  // namespace

CVector fft_forward(const CVector& x) {
  if (x.size() == 0) throw std::invalid_argument("fft_forward: empty input");
  CVector out(x.size());
  plan().fwd(out, x);
  return out;
}

CVector fft_inverse(const CVector& X) {
  if (X.size() == 0) throw std::invalid_argument("fft_inverse: empty input");
  CVector out(X.size());
  plan().inv(out, X);
  return out;
}

CVector fft2_forward(const CVector& x, const Shape& shape) {
  if (shape.ndim != 2) throw std::invalid_argument("fft2_forward: shape must be 2D");
  const Index r = shape.dim(0), c = shape.dim(1);
  if (x.size() != r * c) throw std::invalid_argument("fft2_forward: size mismatch");
  CMatrixRM m = Eigen::Map<const CMatrixRM>(x.data(), r, c);
  CVector buf;
  for (Index i = 0; i < r; ++i) {
    CVector row = m.row(i).transpose();
    plan().fwd(buf, row);
    m.row(i) = buf.transpose();
  }
  for (Index j = 0; j < c; ++j) {
    CVector col = m.col(j);
    plan().fwd(buf, col);
    m.col(j) = buf;
  }
  return Eigen::Map<const CVector>(m.data(), r * c);
}

CVector fft2_inverse(const CVector& X, const Shape& shape) {
  if (shape.ndim != 2) throw std::invalid_argument("fft2_inverse: shape must be 2D");
  const Index r = shape.dim(0), c = shape.dim(1);
  if (X.size() != r * c) throw std::invalid_argument("fft2_inverse: size mismatch");
  CMatrixRM m = Eigen::Map<const CMatrixRM>(X.data(), r, c);
  CVector buf;
  for (Index i = 0; i < r; ++i) {
    CVector row = m.row(i).transpose();
    plan().inv(buf, row);
    m.row(i) = buf.transpose();
  }
  for (Index j = 0; j < c; ++j) {
    CVector col = m.col(j);
    plan().inv(buf, col);
    m.col(j) = buf;
  }
  return Eigen::Map<const CVector>(m.data(), r * c);
}

}  // namespace phasekit
