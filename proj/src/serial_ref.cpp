#include "flare/serial_ref.hpp"

#include <algorithm>
#include <cmath>

namespace flare::serial {

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

std::vector<double> windowed_mean(const std::vector<double>& f, int w, int h, int& vw,
                                  int& vh) {
  const auto& g = window_taps();
  vw = w - kWin + 1;
  vh = h - kWin + 1;
  std::vector<double> tmp(static_cast<size_t>(vw) * h);
  for (int y = 0; y < h; ++y) {
    const double* row = f.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kWin; ++i) acc += g[i] * row[x + i];
      tmp[static_cast<size_t>(y) * vw + x] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(vw) * vh);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int j = 0; j < kWin; ++j)
        acc += g[j] * tmp[(static_cast<size_t>(y) + j) * vw + x];
      out[static_cast<size_t>(y) * vw + x] = acc;
    }
  return out;
}

bool known_at(const Mask& unknown, int x, int y) {
  return x >= 0 && x < unknown.width && y >= 0 && y < unknown.height &&
         unknown.at(x, y) == 0.0;
}

}  // namespace

ImageBuffer convolve2d(const ImageBuffer& img, const FlareKernel& k, Padding padding) {
  if (img.empty()) throw Error(ErrorKind::Dimension, "convolve2d: empty image");
  if (k.size > std::min(img.width, img.height))
    throw Error(ErrorKind::Dimension, "convolve2d: kernel larger than image");
  const int s = k.size, r = s / 2;
  const int w = img.width, h = img.height, wp = w + 2 * r;
  ImageBuffer out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    const std::vector<double> pad = pad_plane(img.plane(c), w, h, r, padding);
    double* dst = out.plane(c);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int j = 0; j < s; ++j) {
          const double* prow = pad.data() + (static_cast<size_t>(y) - j + 2 * r) * wp;
          const double* krow = k.weights.data() + static_cast<size_t>(j) * s;
          for (int i = 0; i < s; ++i) acc += krow[i] * prow[x - i + 2 * r];
        }
        dst[static_cast<size_t>(y) * w + x] = acc;
      }
    }
  }
  return out;
}

double mse(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_dims(b)) throw Error(ErrorKind::Dimension, "mse: image dims differ");
  const int rows = a.height * a.channels;
  std::vector<double> partial(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    const size_t off = static_cast<size_t>(r) * a.width;
    double acc = 0.0;
    for (int x = 0; x < a.width; ++x) {
      const double d = a.data[off + x] - b.data[off + x];
      acc += d * d;
    }
    partial[r] = acc;
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s / static_cast<double>(a.size());
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_dims(b)) throw Error(ErrorKind::Dimension, "ssim: image dims differ");
  if (a.width < kWin || a.height < kWin)
    throw Error(ErrorKind::Dimension, "ssim: image smaller than 11x11 window");

  const ImageBuffer la = luminance(a), lb = luminance(b);
  const int w = a.width, h = a.height;
  std::vector<double> laa(la.data.size()), lbb(la.data.size()), lab(la.data.size());
  for (size_t i = 0; i < la.data.size(); ++i) {
    laa[i] = la.data[i] * la.data[i];
    lbb[i] = lb.data[i] * lb.data[i];
    lab[i] = la.data[i] * lb.data[i];
  }

  int vw = 0, vh = 0;
  const std::vector<double> mx = windowed_mean(la.data, w, h, vw, vh);
  const std::vector<double> my = windowed_mean(lb.data, w, h, vw, vh);
  const std::vector<double> mxx = windowed_mean(laa, w, h, vw, vh);
  const std::vector<double> myy = windowed_mean(lbb, w, h, vw, vh);
  const std::vector<double> mxy = windowed_mean(lab, w, h, vw, vh);

  std::vector<double> row_score(vh, 0.0);
  for (int y = 0; y < vh; ++y) {
    double acc = 0.0;
    for (int x = 0; x < vw; ++x) {
      const size_t i = static_cast<size_t>(y) * vw + x;
      const double ux = mx[i], uy = my[i];
      const double vx = mxx[i] - ux * ux;
      const double vy = myy[i] - uy * uy;
      const double vxy = mxy[i] - ux * uy;
      const double a1 = 2.0 * ux * uy + kC1;
      const double a2 = 2.0 * vxy + kC2;
      const double b1 = ux * ux + uy * uy + kC1;
      const double b2 = vx + vy + kC2;
      acc += (a1 * a2) / (b1 * b2);
    }
    row_score[y] = acc;
  }
  double s = 0.0;
  for (double v : row_score) s += v;
  return s / (static_cast<double>(vw) * vh);
}

PixelCoord best_patch(const InpaintState& state, PixelCoord p, int search_window) {
  const int r = state.patch_radius;
  const Mask& m = state.fill_mask;
  const ImageBuffer& img = state.image;
  const int w = m.width, h = m.height;

  auto fully_known = [&](int cx, int cy) {
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (m.at(cx + dx, cy + dy) != 0.0) return false;
    return true;
  };

  std::vector<int> off_dx, off_dy;
  std::vector<double> target_vals;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int x = p.x + dx, y = p.y + dy;
      if (!known_at(m, x, y)) continue;
      off_dx.push_back(dx);
      off_dy.push_back(dy);
      for (int c = 0; c < img.channels; ++c) target_vals.push_back(img.at(x, y, c));
    }

  const ImageBuffer lum = luminance(img);
  double tix, tiy;
  isophote(lum, &m, p.x, p.y, tix, tiy);
  const double tmag = std::sqrt(tix * tix + tiy * tiy);
  const double diag = std::hypot(2.0 * search_window + 1.0, 2.0 * search_window + 1.0);

  const int sy0 = std::max(r, p.y - search_window);
  const int sy1 = std::min(h - 1 - r, p.y + search_window);
  const int sx0 = std::max(r, p.x - search_window);
  const int sx1 = std::min(w - 1 - r, p.x + search_window);

  double best_diff = 0.0;
  PixelCoord best{-1, -1};
  for (int sy = sy0; sy <= sy1; ++sy) {
    for (int sx = sx0; sx <= sx1; ++sx) {
      if (!fully_known(sx, sy)) continue;
      double ssd = 0.0;
      size_t vi = 0;
      for (size_t k = 0; k < off_dx.size(); ++k) {
        const int qx = sx + off_dx[k], qy = sy + off_dy[k];
        for (int c = 0; c < img.channels; ++c) {
          const double d = img.at(qx, qy, c) - target_vals[vi++];
          ssd += d * d;
        }
      }
      const double ddx = sx - p.x, ddy = sy - p.y;
      const double rho = std::sqrt(ddx * ddx + ddy * ddy) / diag;
      double six, siy;
      isophote(lum, &m, sx, sy, six, siy);
      const double smag = std::sqrt(six * six + siy * siy);
      const double grad_term = std::abs(smag - tmag);
      const double cos_theta =
          (smag > 0.0 && tmag > 0.0) ? (six * tix + siy * tiy) / (smag * tmag) : 0.0;
      const double diff = ssd + rho + grad_term - cos_theta;
      if (best.x < 0 || diff < best_diff) {
        best_diff = diff;
        best = {sx, sy};
      }
    }
  }
  if (best.x < 0)
    throw Error(ErrorKind::Search, "no fully-known candidate patch in search window");
  return best;
}

}  // namespace flare::serial
