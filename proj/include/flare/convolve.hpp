#pragma once

#include <complex>
#include <vector>

#include "flare/image.hpp"

namespace flare {

enum class ConvMethod { Direct, Frequency };

// Border handling. Reflect (mirror, edge pixel not repeated) is the library
// default; Zero is used where energy must never be amplified at the frame
// border (ghost splat blur).
enum class Padding { Reflect, Zero };

// True 2-D convolution (kernel flipped), per channel, output dims = input
// dims. Direct and Frequency agree to <= 1e-5 max-abs. Kernel extent must
// not exceed min(width, height).
ImageBuffer convolve2d(const ImageBuffer& img, const FlareKernel& k,
                       ConvMethod method = ConvMethod::Direct,
                       Padding padding = Padding::Reflect);

// mirror index into [0, n) without repeating the edge sample
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Correlation of `field` with the kernel restricted to offsets inside the
// kernel footprint: out[u] = sum_p field[p] * padded_src[p + u] where
// padded_src is `src` padded by (k_size-1)/2 with the given padding. This is
// the adjoint of convolve2d with respect to the kernel and is used by the
// optimizer; computed via FFT.
std::vector<double> correlate_kernel_adjoint(const ImageBuffer& field,
                                             const ImageBuffer& src, int k_size,
                                             Padding padding = Padding::Reflect);

// Frequency-domain plan for repeated convolutions of one fixed source image
// with many kernels of a fixed extent. Results are bit-identical to the
// one-shot functions above; the source spectra are simply cached.
class FftConvPlan {
 public:
  FftConvPlan(const ImageBuffer& src, int k_size, Padding padding = Padding::Reflect);

  ImageBuffer convolve(const FlareKernel& k) const;
  std::vector<double> kernel_gradient(const ImageBuffer& field) const;

  int kernel_size() const { return k_size_; }

 private:
  int width_ = 0, height_ = 0, channels_ = 0, k_size_ = 0;
  size_t cols_ = 0, rows_ = 0;
  std::vector<std::vector<std::complex<double>>> src_fft_;  // one per channel
};

}  // namespace flare
