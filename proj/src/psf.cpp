#include "flare/psf.hpp"

#include <algorithm>
#include <cmath>

#include "flare/convolve.hpp"
#include "flare/rng.hpp"

namespace flare {

namespace {

constexpr double kBetaFloor = 1e-6;
constexpr double kBetaCap = 10.0;
constexpr double kBriMinFloor = 1e-4;

double mean_luminance(const ImageBuffer& img) {
  const ImageBuffer lum = luminance(img);
  double s = 0.0;
  for (double v : lum.data) s += v;
  return s / static_cast<double>(lum.data.size());
}

double quantile_sorted(std::vector<double>& v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

KernelParams KernelParams::init(int size, uint64_t seed) {
  if (size < 3 || size % 2 == 0)
    throw Error(ErrorKind::Parameter, "kernel size must be odd and >= 3");
  KernelParams p;
  p.size = size;
  p.logits.resize(static_cast<size_t>(size) * size);
  Lcg64 rng(seed);
  for (double& l : p.logits) l = rng.next_double();
  return p;
}

FlareKernel gen_kernel(const KernelParams& p) {
  if (p.size < 3 || p.size % 2 == 0)
    throw Error(ErrorKind::Parameter, "kernel size must be odd and >= 3");
  const size_t n = static_cast<size_t>(p.size) * p.size;
  if (p.logits.size() != n)
    throw Error(ErrorKind::Parameter, "logit count does not match kernel size");

  const double m = *std::max_element(p.logits.begin(), p.logits.end());
  std::vector<double> w(n);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    w[i] = std::exp(p.logits[i] - m);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return FlareKernel(p.size, std::move(w));
}

std::vector<double> softmax_backward(const FlareKernel& k,
                                     const std::vector<double>& grad_kernel) {
  const size_t n = k.weights.size();
  if (grad_kernel.size() != n)
    throw Error(ErrorKind::Dimension, "softmax_backward: gradient size mismatch");
  double dot = 0.0;
  for (size_t i = 0; i < n; ++i) dot += k.weights[i] * grad_kernel[i];
  std::vector<double> g(n);
  for (size_t i = 0; i < n; ++i) g[i] = k.weights[i] * (grad_kernel[i] - dot);
  return g;
}

ImageBuffer render_prior_glow(const ImageBuffer& r, const Mask& m_s, const FlareKernel& k) {
  if (!m_s.matches(r))
    throw Error(ErrorKind::Dimension, "render_prior_glow: mask/image dims disagree");
  ImageBuffer masked(r.width, r.height, r.channels, 0.0);
  for (int c = 0; c < r.channels; ++c)
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        masked.at(x, y, c) = r.at(x, y, c) * m_s.at(x, y);
  return convolve2d(masked, k, ConvMethod::Frequency, Padding::Reflect);
}

double brightness_sigma(const ImageBuffer& r, const Mask& m_s, const BolParams& p) {
  if (!m_s.matches(r))
    throw Error(ErrorKind::Dimension, "brightness_sigma: mask/image dims disagree");
  if (!m_s.any()) return p.nu;
  const ImageBuffer lum = luminance(r);
  std::vector<double> vals;
  vals.reserve(m_s.count_nonzero());
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      if (m_s.at(x, y) != 0.0) vals.push_back(lum.at(x, y, 0));
  const double bri_perc = quantile_sorted(vals, p.percentile);
  return (p.mu - p.eta) * bri_perc + p.nu;
}

double brightness_phi(const ImageBuffer& b_l1, const ImageBuffer& r) {
  if (!b_l1.same_dims(r))
    throw Error(ErrorKind::Dimension, "brightness_phi: dims disagree");
  const double gb = mean_luminance(b_l1);
  const double gr = mean_luminance(r);
  if (gb <= 0.0) return 1.0;
  return gb < gr ? gr / gb : 1.0;
}

double brightness_beta(const ImageBuffer& b_l2, const ImageBuffer& r, const Mask& m_s,
                       int window) {
  if (!b_l2.same_dims(r) || !m_s.matches(r))
    throw Error(ErrorKind::Dimension, "brightness_beta: dims disagree");
  if (window < 1) throw Error(ErrorKind::Parameter, "beta window must be >= 1");
  window = std::min(window, std::min(r.width, r.height));

  const ImageBuffer lum = luminance(r);
  double bri_max = 0.0;
  for (double v : lum.data) bri_max = std::max(bri_max, v);

  // summed-area tables over outside-the-source luminance and its support
  const int w = r.width, h = r.height;
  std::vector<double> sat(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  std::vector<double> cnt(static_cast<size_t>(w + 1) * (h + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool outside = m_s.at(x, y) == 0.0;
      const size_t i = static_cast<size_t>(y + 1) * (w + 1) + (x + 1);
      const size_t up = i - (w + 1);
      sat[i] = sat[i - 1] + sat[up] - sat[up - 1] + (outside ? lum.at(x, y, 0) : 0.0);
      cnt[i] = cnt[i - 1] + cnt[up] - cnt[up - 1] + (outside ? 1.0 : 0.0);
    }
  }
  double bri_loc = 0.0;
  bool any_window = false;
  for (int y = 0; y + window <= h; ++y) {
    for (int x = 0; x + window <= w; ++x) {
      const size_t a = static_cast<size_t>(y) * (w + 1) + x;
      const size_t b = static_cast<size_t>(y) * (w + 1) + x + window;
      const size_t c = static_cast<size_t>(y + window) * (w + 1) + x;
      const size_t d = static_cast<size_t>(y + window) * (w + 1) + x + window;
      const double n = cnt[d] - cnt[b] - cnt[c] + cnt[a];
      if (n <= 0.0) continue;
      const double s = sat[d] - sat[b] - sat[c] + sat[a];
      bri_loc = std::max(bri_loc, s / n);
      any_window = true;
    }
  }
  if (!any_window) bri_loc = 0.0;

  const double bri_min =
      std::max(std::min(mean_luminance(b_l2), mean_luminance(r)), kBriMinFloor);
  const double beta = (bri_max - bri_loc) / bri_min;
  return std::min(std::max(beta, kBetaFloor), kBetaCap);
}

ImageBuffer apply_bol(const ImageBuffer& b_l, const ImageBuffer& r, const Mask& m_s,
                      const BolParams& p, BolScalars* scalars) {
  if (!b_l.same_dims(r) || !m_s.matches(r))
    throw Error(ErrorKind::Dimension, "apply_bol: dims disagree");

  BolScalars sc;
  sc.sigma = brightness_sigma(r, m_s, p);
  ImageBuffer out = scale(b_l, sc.sigma);
  sc.phi = brightness_phi(out, r);
  if (sc.phi != 1.0)
    for (double& v : out.data) v *= sc.phi;
  sc.beta = brightness_beta(out, r, m_s, p.beta_window);
  if (sc.beta != 1.0)
    for (double& v : out.data) v *= sc.beta;
  if (scalars) *scalars = sc;
  return out;
}

}  // namespace flare
