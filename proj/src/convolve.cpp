#include "flare/convolve.hpp"

#include <algorithm>

#include "flare/fft.hpp"

namespace flare {

namespace {

// source padded by the kernel radius on each side
std::vector<double> pad_plane(const double* src, int w, int h, int r, Padding padding) {
  const int wp = w + 2 * r, hp = h + 2 * r;
  std::vector<double> out(static_cast<size_t>(wp) * hp, 0.0);
  for (int y = 0; y < hp; ++y) {
    const int sy = y - r;
    const bool row_in = sy >= 0 && sy < h;
    const int ry = padding == Padding::Reflect ? reflect_index(sy, h) : sy;
    for (int x = 0; x < wp; ++x) {
      const int sx = x - r;
      if (padding == Padding::Zero) {
        if (row_in && sx >= 0 && sx < w)
          out[static_cast<size_t>(y) * wp + x] = src[static_cast<size_t>(sy) * w + sx];
      } else {
        const int rx = reflect_index(sx, w);
        out[static_cast<size_t>(y) * wp + x] = src[static_cast<size_t>(ry) * w + rx];
      }
    }
  }
  return out;
}

void convolve_plane_direct(const double* src, double* dst, int w, int h,
                           const FlareKernel& k, Padding padding) {
  const int s = k.size, r = s / 2;
  const std::vector<double> pad = pad_plane(src, w, h, r, padding);
  const int wp = w + 2 * r;
#pragma omp parallel for schedule(static)
  for (long long y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int j = 0; j < s; ++j) {
        // out[x,y] = sum k[i,j] * padded[x - i + 2r, y - j + 2r]
        const double* prow = pad.data() + (static_cast<size_t>(y) - j + 2 * r) * wp;
        const double* krow = k.weights.data() + static_cast<size_t>(j) * s;
        for (int i = 0; i < s; ++i) acc += krow[i] * prow[x - i + 2 * r];
      }
      dst[static_cast<size_t>(y) * w + x] = acc;
    }
  }
}

// padded source plane embedded at the origin of a rows x cols grid, transformed
std::vector<std::complex<double>> plane_fft(const double* src, int w, int h, int s,
                                            Padding padding, size_t rows, size_t cols) {
  const int r = s / 2;
  const std::vector<double> pad = pad_plane(src, w, h, r, padding);
  const int wp = w + 2 * r, hp = h + 2 * r;
  std::vector<std::complex<double>> a(rows * cols);
  for (int y = 0; y < hp; ++y)
    for (int x = 0; x < wp; ++x)
      a[static_cast<size_t>(y) * cols + x] = pad[static_cast<size_t>(y) * wp + x];
  fft::transform2d(a, rows, cols, false);
  return a;
}

std::vector<std::complex<double>> kernel_fft(const FlareKernel& k, size_t rows,
                                             size_t cols) {
  std::vector<std::complex<double>> b(rows * cols);
  for (int j = 0; j < k.size; ++j)
    for (int i = 0; i < k.size; ++i) b[static_cast<size_t>(j) * cols + i] = k.at(i, j);
  fft::transform2d(b, rows, cols, false);
  return b;
}

std::vector<std::complex<double>> field_fft(const double* g, int w, int h, size_t rows,
                                            size_t cols) {
  std::vector<std::complex<double>> out(rows * cols);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out[static_cast<size_t>(y) * cols + x] = g[static_cast<size_t>(y) * w + x];
  fft::transform2d(out, rows, cols, false);
  return out;
}

}  // namespace

FftConvPlan::FftConvPlan(const ImageBuffer& src, int k_size, Padding padding)
    : width_(src.width), height_(src.height), channels_(src.channels), k_size_(k_size) {
  if (src.empty()) throw Error(ErrorKind::Dimension, "conv plan: empty image");
  if (k_size <= 0 || k_size % 2 == 0)
    throw Error(ErrorKind::Parameter, "conv plan: kernel extent must be odd");
  if (k_size > std::min(src.width, src.height))
    throw Error(ErrorKind::Dimension, "conv plan: kernel larger than image");
  cols_ = fft::next_pow2(static_cast<size_t>(width_) + 2 * (k_size_ - 1));
  rows_ = fft::next_pow2(static_cast<size_t>(height_) + 2 * (k_size_ - 1));
  src_fft_.reserve(channels_);
  for (int c = 0; c < channels_; ++c)
    src_fft_.push_back(plane_fft(src.plane(c), width_, height_, k_size_, padding, rows_,
                                 cols_));
}

ImageBuffer FftConvPlan::convolve(const FlareKernel& k) const {
  if (k.size != k_size_)
    throw Error(ErrorKind::Parameter, "conv plan: kernel extent differs from plan");
  const std::vector<std::complex<double>> b = kernel_fft(k, rows_, cols_);
  ImageBuffer out(width_, height_, channels_);
  std::vector<std::complex<double>> a(rows_ * cols_);
  for (int c = 0; c < channels_; ++c) {
    const std::vector<std::complex<double>>& s = src_fft_[c];
    for (size_t i = 0; i < a.size(); ++i) a[i] = s[i] * b[i];
    fft::transform2d(a, rows_, cols_, true);
    double* dst = out.plane(c);
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        dst[static_cast<size_t>(y) * width_ + x] =
            a[(static_cast<size_t>(y) + k_size_ - 1) * cols_ +
              (static_cast<size_t>(x) + k_size_ - 1)]
                .real();
  }
  return out;
}

std::vector<double> FftConvPlan::kernel_gradient(const ImageBuffer& field) const {
  if (field.width != width_ || field.height != height_ || field.channels != channels_)
    throw Error(ErrorKind::Dimension, "conv plan: field dims differ from source");
  std::vector<std::complex<double>> acc(rows_ * cols_, 0.0);
  for (int c = 0; c < channels_; ++c) {
    const std::vector<std::complex<double>> g =
        field_fft(field.plane(c), width_, height_, rows_, cols_);
    const std::vector<std::complex<double>>& a = src_fft_[c];
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += std::conj(g[i]) * a[i];
  }
  fft::transform2d(acc, rows_, cols_, true);

  // lag (a,b) = sum field[x,y]*pad[x+a, y+b]; kernel index (i,j) maps to
  // lag (s-1-i, s-1-j)
  const int s = k_size_;
  std::vector<double> grad(static_cast<size_t>(s) * s);
  for (int j = 0; j < s; ++j)
    for (int i = 0; i < s; ++i)
      grad[static_cast<size_t>(j) * s + i] =
          acc[(static_cast<size_t>(s) - 1 - j) * cols_ +
              (static_cast<size_t>(s) - 1 - i)]
              .real();
  return grad;
}

ImageBuffer convolve2d(const ImageBuffer& img, const FlareKernel& k, ConvMethod method,
                       Padding padding) {
  if (img.empty()) throw Error(ErrorKind::Dimension, "convolve2d: empty image");
  if (k.size > std::min(img.width, img.height))
    throw Error(ErrorKind::Dimension, "convolve2d: kernel larger than image");
  if (method == ConvMethod::Frequency) return FftConvPlan(img, k.size, padding).convolve(k);
  ImageBuffer out(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c)
    convolve_plane_direct(img.plane(c), out.plane(c), img.width, img.height, k, padding);
  return out;
}

std::vector<double> correlate_kernel_adjoint(const ImageBuffer& field,
                                             const ImageBuffer& src, int k_size,
                                             Padding padding) {
  if (!field.same_dims(src))
    throw Error(ErrorKind::Dimension, "kernel adjoint: field/src dims differ");
  return FftConvPlan(src, k_size, padding).kernel_gradient(field);
}

}  // namespace flare
