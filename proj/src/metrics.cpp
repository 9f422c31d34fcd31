#include "flare/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace flare {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& window_taps() {
  static const std::vector<double> taps = [] {
    std::vector<double> g(kWin);
    double s = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - kWin / 2;
      g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      s += g[i];
    }
    for (double& v : g) v /= s;
    return g;
  }();
  return taps;
}

// ordered per-row partials keep reductions bit-identical however the row
// loops are scheduled
double ordered_sum(const std::vector<double>& row_partials) {
  double s = 0.0;
  for (double v : row_partials) s += v;
  return s;
}

// valid-region windowed mean: out has dims (w-kWin+1) x (h-kWin+1), entry
// (vx,vy) = sum_{d} g[dy]g[dx] * f(x[vy+dy][vx+dx])
struct ValidStats {
  int w = 0, h = 0;
  std::vector<double> v;
  double& at(int x, int y) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int x, int y) const { return v[static_cast<size_t>(y) * w + x]; }
};

ValidStats windowed_mean(const std::vector<double>& f, int w, int h) {
  const auto& g = window_taps();
  // horizontal pass: (w-kWin+1) x h
  const int vw = w - kWin + 1, vh = h - kWin + 1;
  std::vector<double> tmp(static_cast<size_t>(vw) * h);
#pragma omp parallel for schedule(static)
  for (long long y = 0; y < h; ++y) {
    const double* row = f.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += g[i] * row[x + i];
      tmp[static_cast<size_t>(y) * vw + x] = acc;
    }
  }
  ValidStats out;
  out.w = vw;
  out.h = vh;
  out.v.resize(static_cast<size_t>(vw) * vh);
#pragma omp parallel for schedule(static)
  for (long long y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j)
        acc += g[j] * tmp[(static_cast<size_t>(y) + j) * vw + x];
      out.at(x, static_cast<int>(y)) = acc;
    }
  return out;
}

std::vector<double> elementwise_product(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void check_dims(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
  if (!a.same_dims(b))
    throw Error(ErrorKind::Dimension, std::string(who) + ": image dims differ");
}

// full separable correlation of a valid-region coefficient field with the
// window: output is image-sized, out[p] = sum_v g2d[p-v] * coeff[v]
std::vector<double> spread_to_image(const ValidStats& coeff, int w, int h) {
  const auto& g = window_taps();
  const int vw = coeff.w, vh = coeff.h;
  std::vector<double> tmp(static_cast<size_t>(w) * vh, 0.0);
#pragma omp parallel for schedule(static)
  for (long long y = 0; y < vh; ++y) {
    const double* crow = coeff.v.data() + static_cast<size_t>(y) * vw;
    double* trow = tmp.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      const int i0 = std::max(0, x - vw + 1), i1 = std::min(kWin - 1, x);
      for (int i = i0; i <= i1; ++i) acc += g[i] * crow[x - i];
      trow[x] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(w) * h, 0.0);
#pragma omp parallel for schedule(static)
  for (long long y = 0; y < h; ++y) {
    double* orow = out.data() + static_cast<size_t>(y) * w;
    const int j0 = std::max(0, static_cast<int>(y) - vh + 1),
              j1 = std::min(kWin - 1, static_cast<int>(y));
    for (int j = j0; j <= j1; ++j) {
      const double* trow = tmp.data() + (static_cast<size_t>(y) - j) * w;
      for (int x = 0; x < w; ++x) orow[x] += g[j] * trow[x];
    }
  }
  return out;
}

}  // namespace

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  check_dims(a, b, "mse");
  const int rows = a.height * a.channels;
  std::vector<double> partial(rows, 0.0);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const size_t off = static_cast<size_t>(r) * a.width;
    double acc = 0.0;
    for (int x = 0; x < a.width; ++x) {
      const double d = a.data[off + x] - b.data[off + x];
      acc += d * d;
    }
    partial[r] = acc;
  }
  return ordered_sum(partial) / static_cast<double>(a.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  return ssim_with_grad(a, b).value;
}

SsimWithGrad ssim_with_grad(const ImageBuffer& a, const ImageBuffer& b) {
  check_dims(a, b, "ssim");
  if (a.width < kWin || a.height < kWin)
    throw Error(ErrorKind::Dimension, "ssim: image smaller than 11x11 window");

  const ImageBuffer la = luminance(a), lb = luminance(b);
  const int w = a.width, h = a.height;

  const ValidStats mx = windowed_mean(la.data, w, h);
  const ValidStats my = windowed_mean(lb.data, w, h);
  const ValidStats mxx = windowed_mean(elementwise_product(la.data, la.data), w, h);
  const ValidStats myy = windowed_mean(elementwise_product(lb.data, lb.data), w, h);
  const ValidStats mxy = windowed_mean(elementwise_product(la.data, lb.data), w, h);

  const int vw = mx.w, vh = mx.h;
  const double windows = static_cast<double>(vw) * vh;

  // per-window score plus the three coefficient fields of the gradient:
  // d(mean ssim)/dx_i = (2/P) [ (g*c0)(i) + y_i (g*cy)(i) - x_i (g*cx)(i) ]
  ValidStats c0, cx, cy;
  c0.w = cx.w = cy.w = vw;
  c0.h = cx.h = cy.h = vh;
  c0.v.resize(static_cast<size_t>(vw) * vh);
  cx.v = c0.v;
  cy.v = c0.v;
  std::vector<double> row_score(vh, 0.0);

#pragma omp parallel for schedule(static)
  for (long long y = 0; y < vh; ++y) {
    double acc = 0.0;
    for (int x = 0; x < vw; ++x) {
      const double ux = mx.at(x, static_cast<int>(y));
      const double uy = my.at(x, static_cast<int>(y));
      const double vx = mxx.at(x, static_cast<int>(y)) - ux * ux;
      const double vy = myy.at(x, static_cast<int>(y)) - uy * uy;
      const double vxy = mxy.at(x, static_cast<int>(y)) - ux * uy;
      const double a1 = 2.0 * ux * uy + kC1;
      const double a2 = 2.0 * vxy + kC2;
      const double b1 = ux * ux + uy * uy + kC1;
      const double b2 = vx + vy + kC2;
      const double d = b1 * b2;
      const double s = (a1 * a2) / d;
      acc += s;
      const size_t idx = static_cast<size_t>(y) * vw + x;
      cy.v[idx] = a1 / d;
      cx.v[idx] = s / b2;
      c0.v[idx] = uy * (a2 - a1) / d - s * ux / b1 + s * ux / b2;
    }
    row_score[y] = acc;
  }

  SsimWithGrad out;
  out.value = ordered_sum(row_score) / windows;

  const std::vector<double> s0 = spread_to_image(c0, w, h);
  const std::vector<double> sx = spread_to_image(cx, w, h);
  const std::vector<double> sy = spread_to_image(cy, w, h);

  std::vector<double> glum(static_cast<size_t>(w) * h);
  const double k = 2.0 / windows;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(glum.size()); ++i)
    glum[i] = k * (s0[i] + lb.data[i] * sy[i] - la.data[i] * sx[i]);

  out.grad = ImageBuffer(w, h, a.channels);
  if (a.channels == 1) {
    out.grad.data = std::move(glum);
  } else {
    static constexpr double kLumW[3] = {0.2126, 0.7152, 0.0722};
    for (int c = 0; c < 3; ++c) {
      double* p = out.grad.plane(c);
      for (size_t i = 0; i < glum.size(); ++i) p[i] = kLumW[c] * glum[i];
    }
  }
  return out;
}

}  // namespace flare
