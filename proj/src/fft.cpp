#include "flare/fft.hpp"

#include <cmath>

#include "flare/error.hpp"

namespace flare {
namespace fft {

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// twiddle table for half-size butterflies, recomputed per call; cost is
// negligible next to the butterfly passes and keeps the routine stateless
void fill_twiddles(std::vector<std::complex<double>>& tw, size_t n, bool inverse) {
  tw.resize(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n / 2; ++k) {
    const double ang = sign * 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    tw[k] = {std::cos(ang), std::sin(ang)};
  }
}

void transform_stride1(std::complex<double>* a, size_t n,
                       const std::vector<std::complex<double>>& tw) {
  // bit reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const size_t step = n / len;
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = tw[k * step];
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

}  // namespace

void transform(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(n)) throw Error(ErrorKind::Parameter, "fft size must be a power of 2");
  if (n == 1) return;
  std::vector<std::complex<double>> tw;
  fill_twiddles(tw, n, inverse);
  transform_stride1(a.data(), n, tw);
  if (inverse)
    for (auto& v : a) v /= static_cast<double>(n);
}

void transform2d(std::vector<std::complex<double>>& a, size_t rows, size_t cols,
                 bool inverse) {
  if (a.size() != rows * cols)
    throw Error(ErrorKind::Parameter, "fft2d: buffer size mismatch");
  if (!is_pow2(rows) || !is_pow2(cols))
    throw Error(ErrorKind::Parameter, "fft2d sizes must be powers of 2");

  std::vector<std::complex<double>> tw;
  if (cols > 1) {
    fill_twiddles(tw, cols, inverse);
#pragma omp parallel for schedule(static)
    for (long long y = 0; y < static_cast<long long>(rows); ++y)
      transform_stride1(a.data() + static_cast<size_t>(y) * cols, cols, tw);
  }
  if (rows > 1) {
    fill_twiddles(tw, rows, inverse);
#pragma omp parallel for schedule(static)
    for (long long x = 0; x < static_cast<long long>(cols); ++x) {
      std::vector<std::complex<double>> col(rows);
      for (size_t y = 0; y < rows; ++y) col[y] = a[y * cols + static_cast<size_t>(x)];
      transform_stride1(col.data(), rows, tw);
      for (size_t y = 0; y < rows; ++y) a[y * cols + static_cast<size_t>(x)] = col[y];
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(rows * cols);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.size()); ++i)
      a[static_cast<size_t>(i)] *= inv;
  }
}

}  // namespace fft
}  // namespace flare
