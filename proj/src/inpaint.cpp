#include "flare/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "flare/image_io.hpp"

namespace flare {

namespace {

bool in_frame(const Mask& m, int x, int y) {
  return x >= 0 && x < m.width && y >= 0 && y < m.height;
}

bool known_at(const Mask& unknown, int x, int y) {
  return in_frame(unknown, x, y) && unknown.at(x, y) == 0.0;
}

// mean confidence over the in-frame patch, unknown pixels contributing zero
double patch_confidence(const InpaintState& state, PixelCoord p) {
  const int r = state.patch_radius;
  const Mask& m = state.fill_mask;
  double sum = 0.0;
  int area = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const int x = p.x + dx, y = p.y + dy;
      if (!in_frame(m, x, y)) continue;
      ++area;
      if (m.at(x, y) == 0.0)
        sum += state.confidence[static_cast<size_t>(y) * m.width + x];
    }
  }
  return area > 0 ? sum / area : 0.0;
}

// unit normal of the fill front from the mask gradient; false when flat
bool front_normal(const Mask& m, int x, int y, double& nx, double& ny) {
  auto at_clamped = [&](int xx, int yy) {
    xx = std::clamp(xx, 0, m.width - 1);
    yy = std::clamp(yy, 0, m.height - 1);
    return m.at(xx, yy);
  };
  const double gx = (at_clamped(x + 1, y) - at_clamped(x - 1, y)) / 2.0;
  const double gy = (at_clamped(x, y + 1) - at_clamped(x, y - 1)) / 2.0;
  const double n = std::sqrt(gx * gx + gy * gy);
  if (n == 0.0) return false;
  nx = gx / n;
  ny = gy / n;
  return true;
}

bool on_front(const InpaintState& state, PixelCoord p) {
  const Mask& m = state.fill_mask;
  if (!in_frame(m, p.x, p.y) || m.at(p.x, p.y) == 0.0) return false;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      if (known_at(m, p.x + dx, p.y + dy)) return true;
    }
  return false;
}

void dump_debug(const InpaintState& state, const std::vector<double>& priorities,
                const std::string& dir, int iter) {
  ImageBuffer overlay(state.image.width, state.image.height, 3, 0.0);
  const ImageBuffer lum = luminance(state.image);
  for (int y = 0; y < overlay.height; ++y)
    for (int x = 0; x < overlay.width; ++x)
      for (int c = 0; c < 3; ++c) overlay.at(x, y, c) = lum.at(x, y, 0);
  double pmax = 0.0;
  for (double p : priorities) pmax = std::max(pmax, p);
  ImageBuffer heat(state.image.width, state.image.height, 1, 0.0);
  for (size_t i = 0; i < state.front.size(); ++i) {
    const PixelCoord p = state.front[i];
    overlay.at(p.x, p.y, 0) = 1.0;
    overlay.at(p.x, p.y, 1) = 0.0;
    overlay.at(p.x, p.y, 2) = 0.0;
    heat.at(p.x, p.y, 0) = pmax > 0.0 ? priorities[i] / pmax : 0.0;
  }
  char name[64];
  std::snprintf(name, sizeof(name), "/front_%04d.png", iter);
  save_image(overlay, dir + name);
  std::snprintf(name, sizeof(name), "/priority_%04d.png", iter);
  save_image(heat, dir + name);
}

}  // namespace

Mask derive_ghost_mask(const Mask& m_s, double cx, double cy, int dilation) {
  if (cx < 0.0 || cx > m_s.width - 1 || cy < 0.0 || cy > m_s.height - 1)
    throw Error(ErrorKind::Parameter, "optical center outside frame");
  const int kx = static_cast<int>(std::lround(2.0 * cx));
  const int ky = static_cast<int>(std::lround(2.0 * cy));
  Mask out(m_s.width, m_s.height, 0.0);
  for (int y = 0; y < m_s.height; ++y) {
    for (int x = 0; x < m_s.width; ++x) {
      const int px = kx - x, py = ky - y;
      if (in_frame(m_s, px, py) && m_s.at(px, py) != 0.0) out.at(x, y) = 1.0;
    }
  }
  return dilation > 0 ? dilate(out, dilation) : out;
}

InpaintState init_inpaint_state(const ImageBuffer& r, const Mask& m_r, int patch_radius) {
  if (!m_r.matches(r))
    throw Error(ErrorKind::Dimension, "inpaint: mask/image dims disagree");
  if (patch_radius < 1) throw Error(ErrorKind::Parameter, "patch_radius must be >= 1");
  InpaintState state;
  state.image = r;
  state.fill_mask = Mask(m_r.width, m_r.height, 0.0);
  state.confidence.assign(static_cast<size_t>(m_r.width) * m_r.height, 1.0);
  state.patch_radius = patch_radius;
  for (int y = 0; y < m_r.height; ++y)
    for (int x = 0; x < m_r.width; ++x)
      if (m_r.at(x, y) != 0.0) {
        state.fill_mask.at(x, y) = 1.0;
        state.confidence[static_cast<size_t>(y) * m_r.width + x] = 0.0;
      }
  recompute_front(state);
  return state;
}

void recompute_front(InpaintState& state) {
  state.front.clear();
  const Mask& m = state.fill_mask;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y) != 0.0 && on_front(state, {x, y})) state.front.push_back({x, y});
}

void isophote(const ImageBuffer& lum, const Mask* unknown, int x, int y, double& ix,
              double& iy) {
  auto known = [&](int xx, int yy) {
    if (xx < 0 || xx >= lum.width || yy < 0 || yy >= lum.height) return false;
    return unknown == nullptr || unknown->at(xx, yy) == 0.0;
  };
  auto axis = [&](int ax, int ay) {
    const bool ka = known(x - ax, y - ay);
    const bool kb = known(x + ax, y + ay);
    const bool kp = known(x, y);
    if (ka && kb)
      return (lum.at(x + ax, y + ay, 0) - lum.at(x - ax, y - ay, 0)) / 2.0;
    if (kp && kb) return lum.at(x + ax, y + ay, 0) - lum.at(x, y, 0);
    if (ka && kp) return lum.at(x, y, 0) - lum.at(x - ax, y - ay, 0);
    return 0.0;
  };
  const double gx = axis(1, 0);
  const double gy = axis(0, 1);
  ix = -gy;
  iy = gx;
}

double priority(const InpaintState& state, PixelCoord p) {
  if (!on_front(state, p))
    throw Error(ErrorKind::Contract, "priority queried off the fill front");
  const double c = patch_confidence(state, p);
  double nx, ny;
  if (!front_normal(state.fill_mask, p.x, p.y, nx, ny)) return 0.0;
  const ImageBuffer lum = luminance(state.image);
  double ix, iy;
  isophote(lum, &state.fill_mask, p.x, p.y, ix, iy);
  return c * std::abs(ix * nx + iy * ny);
}

PixelCoord best_patch(const InpaintState& state, PixelCoord p, int search_window) {
  const int r = state.patch_radius;
  const Mask& m = state.fill_mask;
  const int w = m.width, h = m.height;

  // prefix sums of the unknown indicator for O(1) fully-known patch tests
  std::vector<int> sat(static_cast<size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y + 1) * (w + 1) + (x + 1);
      sat[i] = sat[i - 1] + sat[i - (w + 1)] - sat[i - (w + 1) - 1] +
               (m.at(x, y) != 0.0 ? 1 : 0);
    }
  auto unknown_in_patch = [&](int cx, int cy) {
    const int x0 = cx - r, y0 = cy - r, x1 = cx + r + 1, y1 = cy + r + 1;
    return sat[static_cast<size_t>(y1) * (w + 1) + x1] -
           sat[static_cast<size_t>(y0) * (w + 1) + x1] -
           sat[static_cast<size_t>(y1) * (w + 1) + x0] +
           sat[static_cast<size_t>(y0) * (w + 1) + x0];
  };

  // offsets of known in-frame target pixels, with their values
  const ImageBuffer& img = state.image;
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

  struct Candidate {
    double diff = 0.0;
    int x = -1, y = -1;
  };
  const int rows = sy1 >= sy0 ? sy1 - sy0 + 1 : 0;
  std::vector<Candidate> row_best(static_cast<size_t>(std::max(rows, 0)));

#pragma omp parallel for schedule(static)
  for (int row = 0; row < rows; ++row) {
    const int sy = sy0 + row;
    Candidate best;
    for (int sx = sx0; sx <= sx1; ++sx) {
      if (unknown_in_patch(sx, sy) != 0) continue;
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
      if (best.x < 0 || diff < best.diff) best = {diff, sx, sy};
    }
    row_best[static_cast<size_t>(row)] = best;
  }

  Candidate best;
  for (const Candidate& c : row_best) {
    if (c.x < 0) continue;
    if (best.x < 0 || c.diff < best.diff) best = c;
  }
  if (best.x < 0)
    throw Error(ErrorKind::Search, "no fully-known candidate patch in search window");
  return {best.x, best.y};
}

ImageBuffer inpaint(const ImageBuffer& r, const Mask& m_r, int patch_radius,
                    int search_window, const std::string& debug_dir) {
  if (!m_r.matches(r))
    throw Error(ErrorKind::Dimension, "inpaint: mask/image dims disagree");
  const size_t hole = m_r.count_nonzero();
  if (hole == 0) return r;
  if (hole * 2 >= static_cast<size_t>(r.width) * r.height)
    throw Error(ErrorKind::Contract, "fill region must cover under half the frame");
  if (search_window < 1) throw Error(ErrorKind::Parameter, "search window must be >= 1");

  InpaintState state = init_inpaint_state(r, m_r, patch_radius);
  const int max_window = std::max(r.width, r.height);

  int iter = 0;
  while (state.fill_mask.any()) {
    recompute_front(state);
    if (state.front.empty())
      throw Error(ErrorKind::Stall, "fill front vanished with pixels remaining");

    std::vector<double> priorities(state.front.size());
    size_t pick = 0;
    for (size_t i = 0; i < state.front.size(); ++i) {
      priorities[i] = priority(state, state.front[i]);
      if (priorities[i] > priorities[pick]) pick = i;
    }
    if (!debug_dir.empty()) dump_debug(state, priorities, debug_dir, iter);

    const PixelCoord p = state.front[pick];
    const double conf = patch_confidence(state, p);

    PixelCoord src{-1, -1};
    for (int win = search_window;; win *= 2) {
      try {
        src = best_patch(state, p, win);
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Search || win >= max_window) throw;
      }
    }

    int filled = 0;
    const int pr = state.patch_radius;
    for (int dy = -pr; dy <= pr; ++dy) {
      for (int dx = -pr; dx <= pr; ++dx) {
        const int tx = p.x + dx, ty = p.y + dy;
        if (!in_frame(state.fill_mask, tx, ty) || state.fill_mask.at(tx, ty) == 0.0)
          continue;
        for (int c = 0; c < state.image.channels; ++c)
          state.image.at(tx, ty, c) = state.image.at(src.x + dx, src.y + dy, c);
        state.fill_mask.at(tx, ty) = 0.0;
        state.confidence[static_cast<size_t>(ty) * state.fill_mask.width + tx] = conf;
        ++filled;
      }
    }
    if (filled == 0) throw Error(ErrorKind::Stall, "fill step made no progress");
    ++iter;
  }
  return state.image;
}

}  // namespace flare
