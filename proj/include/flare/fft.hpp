#pragma once

#include <complex>
#include <vector>

namespace flare {

// Power-of-2 radix-2 FFT. Stateless and deterministic; sizes are always
// padded to powers of two by the callers.
namespace fft {

size_t next_pow2(size_t n);

// in-place 1-D transform, n = a.size() must be a power of 2
void transform(std::vector<std::complex<double>>& a, bool inverse);

// in-place 2-D transform on row-major rows×cols data (both powers of 2)
void transform2d(std::vector<std::complex<double>>& a, size_t rows, size_t cols,
                 bool inverse);

}  // namespace fft

}  // namespace flare
