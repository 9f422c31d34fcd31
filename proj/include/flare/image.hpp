#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "flare/error.hpp"

namespace flare {

// H×W×C raster of linear-light intensities, planar channel layout
// (channel stride = width*height). Values are nominally in [0,1]; layers
// produced by rendering stages may exceed that range until composed.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw Error(ErrorKind::Parameter, "image dims must be positive, channels 1 or 3");
  }

  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  // start of channel plane c
  double* plane(int c) { return data.data() + static_cast<size_t>(c) * height * width; }
  const double* plane(int c) const {
    return data.data() + static_cast<size_t>(c) * height * width;
  }

  size_t size() const { return data.size(); }
  bool same_dims(const ImageBuffer& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool empty() const { return data.empty(); }
};

// H×W weight field in [0,1]; binary masks hold only {0,1}.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  Mask() = default;
  Mask(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0)
      throw Error(ErrorKind::Parameter, "mask dims must be positive");
  }

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  bool same_dims(const Mask& o) const { return width == o.width && height == o.height; }
  bool matches(const ImageBuffer& img) const {
    return width == img.width && height == img.height;
  }

  size_t count_nonzero() const {
    size_t n = 0;
    for (double v : data) n += (v != 0.0);
    return n;
  }
  bool any() const {
    for (double v : data)
      if (v != 0.0) return true;
    return false;
  }
};

// Odd-extent nonnegative 2-D kernel with unit mass.
struct FlareKernel {
  int size = 0;                 // odd extent
  std::vector<double> weights;  // size*size, row-major

  FlareKernel() = default;
  FlareKernel(int s, std::vector<double> w);

  double& at(int x, int y) { return weights[static_cast<size_t>(y) * size + x]; }
  double at(int x, int y) const { return weights[static_cast<size_t>(y) * size + x]; }

  double sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  // identity kernel: 1 at center
  static FlareKernel delta(int size = 1);
  static FlareKernel uniform(int size);
  static FlareKernel gaussian(int size, double sigma);
  // flat-top circular kernel, constant inside `radius`
  static FlareKernel disc(int size, double radius);
  // renormalizes arbitrary nonnegative weights to unit mass
  static FlareKernel normalized(int size, std::vector<double> w);
  // full self-convolution applied `order-1` times: result extent order*(size-1)+1
  FlareKernel self_convolve(int order) const;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Rec.709 luma plane; 1-channel input passes through.
ImageBuffer luminance(const ImageBuffer& img);

// elementwise helpers; add and scale do not clamp
ImageBuffer add(const ImageBuffer& a, const ImageBuffer& b);
ImageBuffer scale(const ImageBuffer& a, double s);
ImageBuffer clamp_image(const ImageBuffer& a);

// binary morphological dilation with a (2*radius+1)^2 square element
Mask dilate(const Mask& m, int radius);

}  // namespace flare
