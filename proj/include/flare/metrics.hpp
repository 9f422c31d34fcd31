#pragma once

#include "flare/image.hpp"

namespace flare {

// mean squared error over all samples
double mse(const ImageBuffer& a, const ImageBuffer& b);

// 10*log10(1/MSE) with peak 1.0; +infinity when the images are identical
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean SSIM with the standard 11x11 Gaussian window (sigma 1.5), C1=0.01^2,
// C2=0.03^2 on unit range, averaged over windows fully inside the image.
// 3-channel inputs are reduced to luminance first.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

// SSIM value plus the analytic gradient of mean SSIM with respect to `a`
// (same shape as `a`; chained through the luminance weights for 3-channel
// inputs). Used by the optimizer and validated against finite differences.
struct SsimWithGrad {
  double value = 0.0;
  ImageBuffer grad;
};
SsimWithGrad ssim_with_grad(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace flare
