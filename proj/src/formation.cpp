#include "flare/formation.hpp"

#include <algorithm>
#include <cmath>

#include "flare/convolve.hpp"
#include "flare/rng.hpp"

namespace flare {

namespace {

// direct convolution for compact kernels, frequency domain once the
// self-convolved extents get large
ConvMethod pick_method(int kernel_size) {
  return kernel_size >= 31 ? ConvMethod::Frequency : ConvMethod::Direct;
}

ImageBuffer masked_image(const ImageBuffer& img, const Mask& m) {
  ImageBuffer out(img.width, img.height, img.channels, 0.0);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(x, y, c) = img.at(x, y, c) * m.at(x, y);
  return out;
}

}  // namespace

void validate_optics(const OpticalConfig& cfg, int width, int height) {
  if (!(cfg.n1 > 0.0) || !(cfg.n2 > 0.0))
    throw Error(ErrorKind::Parameter, "refractive indices must be positive");
  if (!(cfg.scatter_alpha >= 0.0 && cfg.scatter_alpha <= 1.0))
    throw Error(ErrorKind::Parameter, "scatter_alpha must lie in [0,1]");
  if (cfg.scatter_orders < 1)
    throw Error(ErrorKind::Parameter, "scatter_orders must be >= 1");
  if (!(cfg.order_decay > 0.0 && cfg.order_decay < 1.0))
    throw Error(ErrorKind::Parameter, "order_decay must lie in (0,1)");
  if (!(cfg.ghost_attenuation > 0.0 && cfg.ghost_attenuation <= 1.0))
    throw Error(ErrorKind::Parameter, "ghost_attenuation must lie in (0,1]");
  if (cfg.ghost_blur_sigma < 0.0)
    throw Error(ErrorKind::Parameter, "ghost_blur_sigma must be >= 0");
  if (cfg.center_x < 0.0 || cfg.center_x > width - 1 || cfg.center_y < 0.0 ||
      cfg.center_y > height - 1)
    throw Error(ErrorKind::Parameter, "optical center outside image bounds");
}

FlareKernel compose_scatter_kernel(const OpticalConfig& cfg, const FlareKernel& peak,
                                   const FlareKernel& halo) {
  const double a = cfg.scatter_alpha;
  if (!(a >= 0.0 && a <= 1.0))
    throw Error(ErrorKind::Parameter, "scatter_alpha must lie in [0,1]");
  const int size = std::max(peak.size, halo.size);
  std::vector<double> w(static_cast<size_t>(size) * size, 0.0);
  const int c = size / 2;
  w[static_cast<size_t>(c) * size + c] = 1.0 - a;
  auto accumulate = [&](const FlareKernel& k, double scale) {
    const int off = (size - k.size) / 2;
    for (int y = 0; y < k.size; ++y)
      for (int x = 0; x < k.size; ++x)
        w[static_cast<size_t>(y + off) * size + (x + off)] += scale * k.at(x, y);
  };
  accumulate(peak, a / 2.0);
  accumulate(halo, a / 2.0);
  return FlareKernel::normalized(size, std::move(w));
}

ImageBuffer render_glow(const ImageBuffer& clean, const Mask& m_s, const FlareKernel& k,
                        const OpticalConfig& cfg) {
  if (!m_s.matches(clean))
    throw Error(ErrorKind::Dimension, "render_glow: mask/image dims disagree");
  if (cfg.scatter_orders < 1)
    throw Error(ErrorKind::Parameter, "scatter_orders must be >= 1");

  ImageBuffer layer(clean.width, clean.height, clean.channels, 0.0);
  if (!m_s.any()) return layer;
  const ImageBuffer src = masked_image(clean, m_s);

  double decay = 1.0;
  for (int order = 1; order <= cfg.scatter_orders; ++order) {
    decay *= cfg.order_decay;
    if (decay == 0.0) break;
    const FlareKernel ki = k.self_convolve(order);
    const ImageBuffer spread = convolve2d(src, ki, pick_method(ki.size), Padding::Reflect);
    for (size_t i = 0; i < layer.size(); ++i) layer.data[i] += decay * spread.data[i];
  }
  return layer;
}

GhostRender render_ghost(const ImageBuffer& clean, const Mask& m_s,
                         const OpticalConfig& cfg) {
  if (!m_s.matches(clean))
    throw Error(ErrorKind::Dimension, "render_ghost: mask/image dims disagree");

  GhostRender out;
  out.layer = ImageBuffer(clean.width, clean.height, clean.channels, 0.0);
  out.mask = Mask(clean.width, clean.height, 0.0);
  if (!m_s.any()) {
    out.empty_warning = true;
    return out;
  }

  bool landed = false;
  for (int y = 0; y < clean.height; ++y) {
    for (int x = 0; x < clean.width; ++x) {
      if (m_s.at(x, y) == 0.0) continue;
      int mx, my;
      mirror_point(cfg.center_x, cfg.center_y, x, y, mx, my);
      if (mx < 0 || mx >= clean.width || my < 0 || my >= clean.height) continue;
      landed = true;
      out.mask.at(mx, my) = 1.0;
      for (int c = 0; c < clean.channels; ++c)
        out.layer.at(mx, my, c) = clean.at(x, y, c) * m_s.at(x, y);
    }
  }
  if (!landed) {
    out.empty_warning = true;
    return out;
  }

  if (cfg.ghost_blur_sigma > 0.0) {
    const int radius = static_cast<int>(std::ceil(3.0 * cfg.ghost_blur_sigma));
    const FlareKernel g = FlareKernel::gaussian(2 * radius + 1, cfg.ghost_blur_sigma);
    // zero padding: reflect would mint energy at the frame border and break
    // the energy bound against the source
    out.layer = convolve2d(out.layer, g, pick_method(g.size), Padding::Zero);
    out.mask = dilate(out.mask, static_cast<int>(std::ceil(2.0 * cfg.ghost_blur_sigma)));
  }
  if (cfg.ghost_attenuation != 1.0)
    for (double& v : out.layer.data) v *= cfg.ghost_attenuation;
  return out;
}

ImageBuffer compose_joint(const FlareScene& scene) {
  if (!scene.ideal.same_dims(scene.glow) || !scene.ideal.same_dims(scene.ghost))
    throw Error(ErrorKind::Dimension, "compose_joint: layer dims disagree");
  ImageBuffer out(scene.ideal.width, scene.ideal.height, scene.ideal.channels, 0.0);
  for (size_t i = 0; i < out.size(); ++i)
    out.data[i] = clamp01(scene.ideal.data[i] + scene.glow.data[i] + scene.ghost.data[i]);
  return out;
}

SynthResult synth_pair(const ImageBuffer& clean, const OpticalConfig& cfg,
                       const SynthParams& synth, uint64_t seed) {
  validate_optics(cfg, clean.width, clean.height);

  SynthResult res;
  res.scene.ideal = clean;

  SourceDetection det =
      extract_light_mask(clean, synth.source_percentile, synth.source_min_area);
  if (det.empty_warning) {
    if (!synth.inject_source)
      throw Error(ErrorKind::Contract, "no light source found and none supplied");
    for (int y = 0; y < clean.height; ++y) {
      for (int x = 0; x < clean.width; ++x) {
        const double dx = x - synth.inject_x, dy = y - synth.inject_y;
        if (dx * dx + dy * dy > synth.inject_radius * synth.inject_radius) continue;
        for (int c = 0; c < clean.channels; ++c)
          res.scene.ideal.at(x, y, c) = synth.inject_intensity;
      }
    }
    det = extract_light_mask(res.scene.ideal, synth.source_percentile,
                             synth.source_min_area);
    if (det.empty_warning)
      throw Error(ErrorKind::Contract, "injected source too dim or too small to detect");
  }
  res.scene.source_mask = det.mask;

  Lcg64 rng(seed);
  res.gamma = rng.uniform(synth.gamma_lo, synth.gamma_hi);

  auto component = [&synth](double shape) {
    if (synth.scatter_profile == "disc") {
      const int r = std::max(1, static_cast<int>(std::ceil(shape)));
      return FlareKernel::disc(2 * r + 1, shape);
    }
    if (synth.scatter_profile != "gauss")
      throw Error(ErrorKind::Parameter, "scatter_profile must be gauss or disc");
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * shape)));
    return FlareKernel::gaussian(2 * r + 1, shape);
  };
  const FlareKernel k = compose_scatter_kernel(cfg, component(synth.peak_sigma),
                                               component(synth.halo_sigma));

  res.scene.glow = render_glow(res.scene.ideal, det.mask, k, cfg);
  GhostRender ghost = render_ghost(res.scene.ideal, det.mask, cfg);
  res.scene.ghost = std::move(ghost.layer);
  res.scene.ghost_mask = std::move(ghost.mask);

  // tone shaping of the flare layers only; layers are nonnegative
  for (double& v : res.scene.glow.data) v = std::pow(std::max(v, 0.0), res.gamma);
  for (double& v : res.scene.ghost.data) v = std::pow(std::max(v, 0.0), res.gamma);

  res.flared = compose_joint(res.scene);
  res.clean = res.scene.ideal;
  return res;
}

}  // namespace flare
