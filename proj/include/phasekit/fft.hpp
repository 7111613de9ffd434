#pragma once

#include "phasekit/types.hpp"

namespace phasekit {

// Thin DFT wrappers. Convention throughout the library:
//   forward:  X[k] = sum_n x[n] e^{-j 2 pi k n / N}   (unscaled)
//   inverse:  x[n] = (1/N) sum_k X[k] e^{+j 2 pi k n / N}
// Arbitrary lengths are supported.

CVector fft_forward(const CVector& x);
CVector fft_inverse(const CVector& X);

/// 2D forward/inverse DFT of a row-major flattened grid of the given shape.
CVector fft2_forward(const CVector& x, const Shape& shape);
CVector fft2_inverse(const CVector& X, const Shape& shape);

/// Circular distance of DFT bin k from the zero-frequency bin on an n-grid.
inline Index freq_distance(Index k, Index n) { return std::min(k, n - k); }

}  // namespace phasekit
