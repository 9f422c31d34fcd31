// Timing comparison between the OpenMP kernels and the serial reference
// implementations they are tested against. Prints a table to stdout.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <omp.h>

#include "flare/convolve.hpp"
#include "flare/inpaint.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"
#include "flare/serial_ref.hpp"

using namespace flare;

namespace {

ImageBuffer random_image(int w, int h, int ch, uint64_t seed) {
  ImageBuffer img(w, h, ch);
  Lcg64 rng(seed);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void row(const std::string& name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %12.3f %12.3f %9.2fx\n", name.c_str(), serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
  int size = 256;
  int reps = 5;
  if (argc > 1) size = std::atoi(argv[1]);
  if (argc > 2) reps = std::atoi(argv[2]);

  std::printf("threads: %d, image: %dx%d, reps: %d\n", omp_get_max_threads(), size,
              size, reps);
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "omp ms", "speedup");

  const ImageBuffer img = random_image(size, size, 3, 7);
  const ImageBuffer img2 = random_image(size, size, 3, 11);
  const FlareKernel k = FlareKernel::gaussian(15, 3.0);

  row("convolve 15x15 direct",
      time_ms([&] { serial::convolve2d(img, k, Padding::Reflect); }, reps),
      time_ms([&] { convolve2d(img, k, ConvMethod::Direct, Padding::Reflect); }, reps));

  row("ssim",
      time_ms([&] { serial::ssim(img, img2); }, reps),
      time_ms([&] { ssim(img, img2); }, reps));

  row("mse",
      time_ms([&] { serial::mse(img, img2); }, reps),
      time_ms([&] { mse(img, img2); }, reps));

  // patch search over a dense front pixel, full window
  {
    Mask unknown(size, size);
    for (int y = size / 2 - 6; y < size / 2 + 6; ++y)
      for (int x = size / 2 - 6; x < size / 2 + 6; ++x) unknown.at(x, y) = 1;
    InpaintState st = init_inpaint_state(img, unknown, 4);
    recompute_front(st);
    const PixelCoord p = st.front.front();
    row("best_patch w=48",
        time_ms([&] { serial::best_patch(st, p, 48); }, reps),
        time_ms([&] { best_patch(st, p, 48); }, reps));
  }

  return 0;
}
