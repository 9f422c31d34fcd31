#pragma once

#include <cstdint>
#include <vector>

#include "flare/image.hpp"

namespace flare {

// Unconstrained logits behind the softmax-normalized blur kernel.
struct KernelParams {
  int size = 33;  // odd, >= 3
  std::vector<double> logits;

  static KernelParams init(int size, uint64_t seed);
};

// Brightness Operation Layer coefficients.
struct BolParams {
  double mu = 1.2;
  double eta = 0.2;
  double nu = 0.05;
  double percentile = 0.95;
  int beta_window = 16;  // sliding-window extent for the local-brightness term
};

// softmax over all logits, reshaped size x size
FlareKernel gen_kernel(const KernelParams& p);

// chain rule through the softmax: g_logit = k .* (g_k - <k, g_k>)
std::vector<double> softmax_backward(const FlareKernel& k,
                                     const std::vector<double>& grad_kernel);

// B_l = (r x m_s) * k
ImageBuffer render_prior_glow(const ImageBuffer& r, const Mask& m_s, const FlareKernel& k);

// Ad_sigma = (mu - eta) * Bri_perc + nu, Bri_perc the percentile luminance
// quantile over the source support; empty mask falls back to nu.
double brightness_sigma(const ImageBuffer& r, const Mask& m_s, const BolParams& p);

// Ad_phi = mean_lum(r) / mean_lum(b_l1) when b_l1 is globally dimmer, else 1.
double brightness_phi(const ImageBuffer& b_l1, const ImageBuffer& r);

// Ad_beta = (Bri_max - Bri_loc) / Bri_min, clamped to (0, 10]. Bri_loc is the
// largest sliding-window mean luminance of r outside the source; Bri_min the
// smaller of the two global mean luminances, floored at 1e-4.
double brightness_beta(const ImageBuffer& b_l2, const ImageBuffer& r, const Mask& m_s,
                       int window);

struct BolScalars {
  double sigma = 1.0;
  double phi = 1.0;
  double beta = 1.0;
  double total() const { return sigma * phi * beta; }
};

// staged scaling L = B_l * Ad_sigma * Ad_phi * Ad_beta; scalars reported for
// the solver, which treats them as constants in the gradient
ImageBuffer apply_bol(const ImageBuffer& b_l, const ImageBuffer& r, const Mask& m_s,
                      const BolParams& p, BolScalars* scalars = nullptr);

}  // namespace flare
