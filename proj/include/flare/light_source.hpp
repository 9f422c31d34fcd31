#pragma once

#include <vector>

#include "flare/image.hpp"

namespace flare {

struct SourceComponent {
  double centroid_x = 0.0;  // subpixel, pixel-center coords
  double centroid_y = 0.0;
  int area = 0;
  double peak_luminance = 0.0;
};

struct SourceDetection {
  Mask mask;  // M_s, binary
  std::vector<SourceComponent> components;
  double threshold_used = 0.0;
  bool empty_warning = false;  // set when nothing cleared the threshold
};

// Threshold segmentation of the light source: threshold is the given
// luminance quantile with an absolute floor of 0.85. Components are
// 8-connected; those smaller than min_area are dropped, then enclosed
// background holes of at most 4 px are filled.
SourceDetection extract_light_mask(const ImageBuffer& r, double percentile = 0.99,
                                   int min_area = 9);

// (r × M_s) feathered with a Gaussian of the given sigma. sigma = 0 returns
// the masked image unchanged.
ImageBuffer weighted_light_map(const ImageBuffer& r, const SourceDetection& det,
                               double feather_sigma);

}  // namespace flare
