#pragma once

#include <string>

#include "flare/image.hpp"
#include "flare/light_source.hpp"
#include "flare/optics.hpp"

namespace flare {

// Forward-model parameters: scatter kernel mixture, multi-order glow, and
// the reflected ghost geometry.
struct OpticalConfig {
  double center_x = 64.0;  // optical center, subpixel
  double center_y = 64.0;
  double n1 = 1.0;
  double n2 = 1.5;
  double ghost_attenuation = 0.35;  // (0,1]
  double ghost_blur_sigma = 1.5;    // pixels, >= 0
  double scatter_alpha = 0.85;      // delta vs scattered mix, [0,1]
  int scatter_orders = 3;           // >= 1
  double order_decay = 0.5;         // (0,1)
};

void validate_optics(const OpticalConfig& cfg, int width, int height);

// Synthesis extras that are not lens physics: scatter kernel shapes, the
// gamma band for tone shaping, source detection settings, and an optional
// injected source disc for clean images that lack a bright region.
struct SynthParams {
  // "gauss": peak/halo are gaussian sigmas. "disc": flat-top circular
  // kernels with peak/halo interpreted as radii in pixels.
  std::string scatter_profile = "gauss";
  double peak_sigma = 1.0;
  double halo_sigma = 6.0;
  double gamma_lo = 1.4;
  double gamma_hi = 1.8;
  double source_percentile = 0.99;
  int source_min_area = 9;
  bool inject_source = false;
  double inject_x = 0.0;
  double inject_y = 0.0;
  double inject_radius = 3.0;
  double inject_intensity = 1.0;
};

struct FlareScene {
  ImageBuffer ideal;  // flare-free ground truth (light source included)
  ImageBuffer glow;   // additive layer, un-clamped
  ImageBuffer ghost;  // additive layer, un-clamped
  Mask source_mask;
  Mask ghost_mask;
};

struct GhostRender {
  ImageBuffer layer;
  Mask mask;
  bool empty_warning = false;  // empty source, or reflection fell outside frame
};

struct SynthResult {
  ImageBuffer flared;
  ImageBuffer clean;
  FlareScene scene;
  double gamma = 0.0;
};

// (1-alpha)*delta + alpha*(peak+halo)/2, renormalized. Peak and halo may
// have different extents; both must be normalized.
FlareKernel compose_scatter_kernel(const OpticalConfig& cfg, const FlareKernel& peak,
                                   const FlareKernel& halo);

// Multi-order scatter: sum_{i=1..orders} decay^i * ((clean x m_s) * k^{*i}).
// Layer is additive and intentionally not clamped.
ImageBuffer render_glow(const ImageBuffer& clean, const Mask& m_s, const FlareKernel& k,
                        const OpticalConfig& cfg);

// Point reflection of the masked source about the optical center, Gaussian
// blurred and attenuated. Mask is the reflected source mask dilated by
// ceil(2*sigma). Empty source, or a reflection entirely outside the frame,
// yields an empty result with the warning flag set.
GhostRender render_ghost(const ImageBuffer& clean, const Mask& m_s,
                         const OpticalConfig& cfg);

// clamp(ideal + glow + ghost, 0, 1)
ImageBuffer compose_joint(const FlareScene& scene);

// Full synthesis: detect (or inject) the light source, render both flare
// layers, tone-shape them with gamma ~ U(gamma_lo, gamma_hi) drawn from the
// seeded generator, and compose. Same seed gives bit-identical results.
SynthResult synth_pair(const ImageBuffer& clean, const OpticalConfig& cfg,
                       const SynthParams& synth, uint64_t seed);

// integer point reflection (x,y) -> (round(2cx)-x, round(2cy)-y)
inline void mirror_point(double cx, double cy, int x, int y, int& mx, int& my) {
  mx = static_cast<int>(std::lround(2.0 * cx)) - x;
  my = static_cast<int>(std::lround(2.0 * cy)) - y;
}

}  // namespace flare
