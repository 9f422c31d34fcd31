#include "flare/image.hpp"

#include <algorithm>
#include <cmath>

namespace flare {

namespace {
constexpr double kKernelSumTol = 1e-6;
}

FlareKernel::FlareKernel(int s, std::vector<double> w) : size(s), weights(std::move(w)) {
  if (size <= 0 || size % 2 == 0)
    throw Error(ErrorKind::Parameter, "kernel extent must be odd and positive");
  if (weights.size() != static_cast<size_t>(size) * size)
    throw Error(ErrorKind::Parameter, "kernel weight count does not match extent");
  for (double v : weights)
    if (!(v >= 0.0))
      throw Error(ErrorKind::Parameter, "kernel weights must be nonnegative and finite");
  if (std::abs(sum() - 1.0) > kKernelSumTol)
    throw Error(ErrorKind::Parameter, "kernel weights must sum to 1");
}

FlareKernel FlareKernel::delta(int size) {
  std::vector<double> w(static_cast<size_t>(size) * size, 0.0);
  w[static_cast<size_t>(size / 2) * size + size / 2] = 1.0;
  return FlareKernel(size, std::move(w));
}

FlareKernel FlareKernel::uniform(int size) {
  std::vector<double> w(static_cast<size_t>(size) * size,
                        1.0 / (static_cast<double>(size) * size));
  return FlareKernel(size, std::move(w));
}

FlareKernel FlareKernel::disc(int size, double radius) {
  if (radius <= 0.0) throw Error(ErrorKind::Parameter, "disc radius must be > 0");
  std::vector<double> w(static_cast<size_t>(size) * size);
  const int c = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x - c, dy = y - c;
      if (dx * dx + dy * dy <= radius * radius)
        w[static_cast<size_t>(y) * size + x] = 1.0;
    }
  return normalized(size, std::move(w));
}

FlareKernel FlareKernel::gaussian(int size, double sigma) {
  if (sigma < 0.0) throw Error(ErrorKind::Parameter, "gaussian sigma must be >= 0");
  if (sigma == 0.0) return delta(size);
  std::vector<double> w(static_cast<size_t>(size) * size);
  const int c = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x - c, dy = y - c;
      w[static_cast<size_t>(y) * size + x] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  return normalized(size, std::move(w));
}

FlareKernel FlareKernel::normalized(int size, std::vector<double> w) {
  double s = 0.0;
  for (double v : w) s += v;
  if (!(s > 0.0))
    throw Error(ErrorKind::Parameter, "cannot normalize kernel with nonpositive mass");
  for (double& v : w) v /= s;
  return FlareKernel(size, std::move(w));
}

FlareKernel FlareKernel::self_convolve(int order) const {
  if (order < 1) throw Error(ErrorKind::Parameter, "self-convolution order must be >= 1");
  FlareKernel acc = *this;
  for (int i = 1; i < order; ++i) {
    const int n = acc.size + size - 1;
    std::vector<double> w(static_cast<size_t>(n) * n, 0.0);
    for (int ay = 0; ay < acc.size; ++ay)
      for (int ax = 0; ax < acc.size; ++ax) {
        const double av = acc.at(ax, ay);
        if (av == 0.0) continue;
        for (int by = 0; by < size; ++by)
          for (int bx = 0; bx < size; ++bx)
            w[static_cast<size_t>(ay + by) * n + (ax + bx)] += av * at(bx, by);
      }
    acc = normalized(n, std::move(w));
  }
  return acc;
}

ImageBuffer luminance(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3)
    throw Error(ErrorKind::Parameter, "luminance expects 1 or 3 channels");
  ImageBuffer out(img.width, img.height, 1);
  const double* r = img.plane(0);
  const double* g = img.plane(1);
  const double* b = img.plane(2);
  const size_t n = static_cast<size_t>(img.width) * img.height;
  for (size_t i = 0; i < n; ++i)
    out.data[i] = 0.2126 * r[i] + 0.7152 * g[i] + 0.0722 * b[i];
  return out;
}

ImageBuffer add(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_dims(b)) throw Error(ErrorKind::Dimension, "add: image dims differ");
  ImageBuffer out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

ImageBuffer scale(const ImageBuffer& a, double s) {
  ImageBuffer out = a;
  for (double& v : out.data) v *= s;
  return out;
}

ImageBuffer clamp_image(const ImageBuffer& a) {
  ImageBuffer out = a;
  for (double& v : out.data) v = clamp01(v);
  return out;
}

Mask dilate(const Mask& m, int radius) {
  if (radius < 0) throw Error(ErrorKind::Parameter, "dilation radius must be >= 0");
  if (radius == 0) return m;
  Mask out(m.width, m.height, 0.0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y) == 0.0) continue;
      const int x0 = std::max(0, x - radius), x1 = std::min(m.width - 1, x + radius);
      const int y0 = std::max(0, y - radius), y1 = std::min(m.height - 1, y + radius);
      for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx) out.at(xx, yy) = 1.0;
    }
  return out;
}

}  // namespace flare
