#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flare/image.hpp"

namespace flare {

struct PixelCoord {
  int x = 0;
  int y = 0;
};

// Working state of the exemplar fill: image with holes, the remaining fill
// region, per-pixel confidence, and the current fill front.
struct InpaintState {
  ImageBuffer image;
  Mask fill_mask;                  // 1 = still unknown
  std::vector<double> confidence;  // 1 outside the original hole, 0 inside
  int patch_radius = 4;
  std::vector<PixelCoord> front;   // unknown pixels with a known 8-neighbor
};

// Ghost region by point reflection about the optical center:
// M_r(x,y) = M_s(round(2cx)-x, round(2cy)-y), then dilated for coverage.
// With dilation 0 the op is an involution on fully in-frame masks.
Mask derive_ghost_mask(const Mask& m_s, double cx, double cy, int dilation = 2);

InpaintState init_inpaint_state(const ImageBuffer& r, const Mask& m_r, int patch_radius);

// rebuild state.front from the current fill mask
void recompute_front(InpaintState& state);

// Luminance gradient rotated 90 degrees, (-dI/dy, dI/dx). Differences use
// only known in-frame pixels: central where both neighbors are known,
// one-sided through p otherwise, zero when an axis has under two samples.
// `known` may be null meaning every in-frame pixel is known.
void isophote(const ImageBuffer& lum, const Mask* unknown, int x, int y, double& ix,
              double& iy);

// Criminisi priority P = C * T at a front pixel: patch confidence times the
// isophote strength across the front normal.
double priority(const InpaintState& state, PixelCoord p);

// Best fully-known source patch for the target patch at p within a square
// search window (half-extent `search_window`). Cost is masked SSD plus a
// normalized center-distance penalty plus isophote terms; ties break to the
// smallest (row, col). Throws a search error when no candidate exists.
PixelCoord best_patch(const InpaintState& state, PixelCoord p, int search_window);

// Full priority-driven exemplar fill of m_r. Pixels outside m_r are returned
// bit-identical to r. When debug_dir is nonempty, per-iteration front and
// priority snapshots are written there as PNGs.
ImageBuffer inpaint(const ImageBuffer& r, const Mask& m_r, int patch_radius = 4,
                    int search_window = 64, const std::string& debug_dir = "");

}  // namespace flare
