#include "flare/light_source.hpp"

#include <algorithm>
#include <cmath>

#include "flare/convolve.hpp"

namespace flare {

namespace {

constexpr double kAbsoluteFloor = 0.85;

double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

// iterative flood fill; returns pixel count of the labeled component
int flood(std::vector<int>& labels, const std::vector<char>& fg, int w, int h, int sx,
          int sy, int label, bool eight_conn, std::vector<int>& stack) {
  stack.clear();
  stack.push_back(sy * w + sx);
  labels[sy * w + sx] = label;
  int count = 0;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    ++count;
    const int x = idx % w, y = idx / w;
    const int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
    const int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
    for (int ny = y0; ny <= y1; ++ny) {
      for (int nx = x0; nx <= x1; ++nx) {
        if (nx == x && ny == y) continue;
        if (!eight_conn && nx != x && ny != y) continue;
        const int nidx = ny * w + nx;
        if (fg[nidx] && labels[nidx] < 0) {
          labels[nidx] = label;
          stack.push_back(nidx);
        }
      }
    }
  }
  return count;
}

}  // namespace

SourceDetection extract_light_mask(const ImageBuffer& r, double percentile, int min_area) {
  if (r.empty()) throw Error(ErrorKind::Parameter, "extract_light_mask: empty image");
  if (!(percentile > 0.0 && percentile < 1.0))
    throw Error(ErrorKind::Parameter, "percentile must lie in (0,1)");
  if (min_area < 1) throw Error(ErrorKind::Parameter, "min_area must be >= 1");

  const ImageBuffer lum = luminance(r);
  const int w = r.width, h = r.height;
  const int n = w * h;

  SourceDetection det;
  det.threshold_used = std::max(quantile(lum.data, percentile), kAbsoluteFloor);
  det.mask = Mask(w, h, 0.0);

  std::vector<char> fg(n, 0);
  bool any = false;
  for (int i = 0; i < n; ++i) {
    fg[i] = lum.data[i] >= det.threshold_used;
    any = any || fg[i];
  }
  if (!any) {
    det.empty_warning = true;
    return det;
  }

  // area filter on 8-connected components
  std::vector<int> labels(n, -1);
  std::vector<int> stack;
  int next = 0;
  std::vector<int> areas;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (fg[y * w + x] && labels[y * w + x] < 0)
        areas.push_back(flood(labels, fg, w, h, x, y, next++, true, stack));
  for (int i = 0; i < n; ++i)
    if (fg[i] && areas[labels[i]] < min_area) fg[i] = 0;

  // fill enclosed background pockets of at most 4 px (4-connectivity)
  std::vector<char> bg(n, 0);
  for (int i = 0; i < n; ++i) bg[i] = !fg[i];
  std::fill(labels.begin(), labels.end(), -1);
  next = 0;
  areas.clear();
  std::vector<char> touches_border;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!bg[y * w + x] || labels[y * w + x] >= 0) continue;
      areas.push_back(flood(labels, bg, w, h, x, y, next++, false, stack));
      touches_border.push_back(0);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (y == 0 || y == h - 1 || x == 0 || x == w - 1) {
        const int l = labels[y * w + x];
        if (l >= 0) touches_border[l] = 1;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int l = labels[i];
    if (l >= 0 && !touches_border[l] && areas[l] <= 4) fg[i] = 1;
  }

  if (std::none_of(fg.begin(), fg.end(), [](char c) { return c != 0; })) {
    det.empty_warning = true;
    return det;
  }

  // final component stats on the filtered and filled mask
  std::fill(labels.begin(), labels.end(), -1);
  next = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (fg[y * w + x] && labels[y * w + x] < 0)
        flood(labels, fg, w, h, x, y, next++, true, stack);

  det.components.assign(next, SourceComponent{});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int l = labels[y * w + x];
      if (l < 0) continue;
      det.mask.at(x, y) = 1.0;
      SourceComponent& c = det.components[l];
      c.centroid_x += x;
      c.centroid_y += y;
      c.area += 1;
      c.peak_luminance = std::max(c.peak_luminance, lum.at(x, y, 0));
    }
  }
  for (SourceComponent& c : det.components) {
    c.centroid_x /= c.area;
    c.centroid_y /= c.area;
  }
  return det;
}

ImageBuffer weighted_light_map(const ImageBuffer& r, const SourceDetection& det,
                               double feather_sigma) {
  if (!det.mask.matches(r) && det.mask.width != 0)
    throw Error(ErrorKind::Dimension, "weighted_light_map: mask/image dims disagree");
  ImageBuffer masked(r.width, r.height, r.channels, 0.0);
  if (det.mask.width == 0 || !det.mask.any()) return masked;
  for (int c = 0; c < r.channels; ++c)
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        masked.at(x, y, c) = r.at(x, y, c) * det.mask.at(x, y);
  if (feather_sigma <= 0.0) return masked;
  const int radius = static_cast<int>(std::ceil(3.0 * feather_sigma));
  const FlareKernel g = FlareKernel::gaussian(2 * radius + 1, feather_sigma);
  return convolve2d(masked, g, ConvMethod::Direct, Padding::Reflect);
}

}  // namespace flare
