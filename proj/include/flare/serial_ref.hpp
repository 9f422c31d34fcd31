#pragma once

#include "flare/convolve.hpp"
#include "flare/inpaint.hpp"
#include "flare/metrics.hpp"

// Single-threaded twins of the OpenMP kernels. Same arithmetic and the same
// reduction order, so results must match the parallel paths byte for byte;
// tests pin that and the benchmark measures the speedup.
namespace flare::serial {

ImageBuffer convolve2d(const ImageBuffer& img, const FlareKernel& k,
                       Padding padding = Padding::Reflect);

double mse(const ImageBuffer& a, const ImageBuffer& b);
double ssim(const ImageBuffer& a, const ImageBuffer& b);

PixelCoord best_patch(const InpaintState& state, PixelCoord p, int search_window);

}  // namespace flare::serial
