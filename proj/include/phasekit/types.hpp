#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>

namespace phasekit {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

// Row-major views are used whenever a flattened signal is reinterpreted as a
// 2D grid; all flattening in this library is row-major.
using CMatrixRM = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Extent of a 1D or 2D sample grid.
struct Shape {
  int ndim = 1;
  std::array<Index, 2> dims{0, 0};

  static Shape of1d(Index n) { return Shape{1, {n, 1}}; }
  static Shape of2d(Index rows, Index cols) { return Shape{2, {rows, cols}}; }

  Index count() const { return ndim == 1 ? dims[0] : dims[0] * dims[1]; }
  Index dim(int axis) const { return dims[static_cast<size_t>(axis)]; }

  bool operator==(const Shape& o) const {
    if (ndim != o.ndim) return false;
    if (dims[0] != o.dims[0]) return false;
    return ndim == 1 || dims[1] == o.dims[1];
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }
};

/// SplitMix64 step; the seed combiner used everywhere a stream must be
/// derived deterministically and platform-independently.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97f4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t seed_mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9E3779B97F4A7C15ULL + splitmix64(b)));
}

/// FNV-1a over a string; used to fold solver ids into seed streams.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace phasekit
