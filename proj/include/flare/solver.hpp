#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flare/convolve.hpp"
#include "flare/formation.hpp"
#include "flare/psf.hpp"

namespace flare {

struct SolverConfig {
  int iterations = 3000;
  int mse_only_iters = 1000;  // MSE alone first, then MSE + (1 - SSIM)
  double learning_rate = 30.0;
  uint64_t seed = 0;
  double tv_weight = 1e-4;
  int log_every = 100;
  int kernel_size = 33;  // softmax kernel extent
  // inf-norm cap on the pixel gradient before the step; the structural-loss
  // phase emits gradients orders of magnitude above the fit phase and
  // oscillates without it. 0 disables.
  double grad_clip = 1e-3;
};

// Stage toggles and non-optics pipeline knobs. deglow runs with use_ostpm
// false (pseudo-target is the input), deghost skips the optimizer entirely.
struct PipelineParams {
  double source_percentile = 0.99;
  int source_min_area = 9;
  int ghost_dilation = 2;
  int patch_radius = 4;
  int search_window = 64;
  double feather_sigma = 2.0;
  bool use_ostpm = true;
  bool use_psfr = true;
  std::string debug_dir;
};

struct SolverState {
  ImageBuffer d_pixels;  // free parameters behind the squash
  KernelParams kernel_logits;
  int iter = 0;
  std::vector<double> loss_history;
};

// Smooth [0,1] squash: identity to within 3.5e-4 on [0,1], softly bending
// beyond so every parameter keeps a usable gradient. Saturated regions of a
// valid image must survive a round trip at 40+ dB, which rules out an
// interior sigmoid.
double soft_clamp(double x);
double soft_clamp_grad(double x);
ImageBuffer soft_clamp(const ImageBuffer& img);

// smoothed total variation (mean Charbonnier of forward differences)
double tv_term(const ImageBuffer& img);

// Products of one forward pass, kept for the backward pass.
struct EstimateParts {
  ImageBuffer y_hat;    // squash(u)
  ImageBuffer u;        // D + L + light_map
  ImageBuffer d_image;  // squash(d_pixels)
  ImageBuffer glow;     // L, brightness-aligned prior glow
  FlareKernel kernel;
  BolScalars scalars;
  bool psfr_active = false;
};

// Forward model. `frozen` pins the brightness scalars (the gradient treats
// them as per-step constants); `plan` supplies cached source spectra and must
// match (r x m_s, kernel_size) when given.
EstimateParts forward_estimate(const SolverState& state, const ImageBuffer& r,
                               const Mask& m_s, const BolParams& bol,
                               const ImageBuffer& light_map,
                               const BolScalars* frozen = nullptr,
                               const FftConvPlan* plan = nullptr, bool use_psfr = true);

ImageBuffer compose_estimate(const SolverState& state, const ImageBuffer& r,
                             const Mask& m_s, const BolParams& bol,
                             const ImageBuffer& light_map);

// scheduled data loss: MSE before mse_only_iters, MSE + (1 - SSIM) after
double loss(const ImageBuffer& y_hat, const ImageBuffer& y, int iter,
            const SolverConfig& cfg);

struct GradientRecord {
  ImageBuffer d_pixels;
  std::vector<double> kernel_logits;
  double loss_value = 0.0;  // scheduled data loss
  double tv_value = 0.0;    // tv_weight * TV(D), kept out of loss_history
};

GradientRecord gradients(const SolverState& state, const ImageBuffer& r, const Mask& m_s,
                         const BolParams& bol, const ImageBuffer& light_map,
                         const ImageBuffer& y, const SolverConfig& cfg,
                         const BolScalars* frozen = nullptr,
                         const FftConvPlan* plan = nullptr, bool use_psfr = true);

struct RunReport {
  std::string input;
  uint64_t seed = 0;
  int iterations = 0;
  int mse_only_iters = 0;
  std::vector<double> loss_history;
  std::vector<double> tv_history;
  std::optional<double> psnr_in, psnr_out, ssim_in, ssim_out;
  std::vector<std::pair<std::string, double>> wall_ms_per_stage;
  std::string rng = "lcg64";
};

struct RunResult {
  FlareScene scene;           // ideal = restored image, glow = fitted L
  ImageBuffer pseudo_target;  // y from the inpainting stage
  SolverState state;
  RunReport report;
};

// Full removal pipeline: source detection, ghost inpainting, light map,
// then the scheduled-loss descent. gt, when given, fills the report metrics.
RunResult run(const ImageBuffer& r, const SolverConfig& cfg, const OpticalConfig& optics,
              const BolParams& bol, const PipelineParams& pipeline,
              const ImageBuffer* gt = nullptr, const std::string& input_name = "");

}  // namespace flare
