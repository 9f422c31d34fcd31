#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "flare/error.hpp"
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

double mse_oracle(const ImageBuffer& a, const ImageBuffer& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

// Mean SSIM recomputed from the definition: 11x11 Gaussian window (sigma
// 1.5, taps normalized to sum 1), windows fully inside the image, stats
// accumulated per window with explicit double loops.
double ssim_oracle(const std::vector<double>& x, const std::vector<double>& y,
                   int w, int h) {
  constexpr int win = 11;
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double g[win];
  double gsum = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - (win - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gsum += g[i];
  }
  for (double& v : g) v /= gsum;

  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= h; ++y0)
    for (int x0 = 0; x0 + win <= w; ++x0) {
      double ux = 0, uy = 0, uxx = 0, uyy = 0, uxy = 0;
      for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i) {
          const double wt = g[i] * g[j];
          const double px = x[static_cast<size_t>(y0 + j) * w + (x0 + i)];
          const double py = y[static_cast<size_t>(y0 + j) * w + (x0 + i)];
          ux += wt * px;
          uy += wt * py;
          uxx += wt * px * px;
          uyy += wt * py * py;
          uxy += wt * px * py;
        }
      const double vx = uxx - ux * ux, vy = uyy - uy * uy, vxy = uxy - ux * uy;
      total += (2.0 * ux * uy + c1) * (2.0 * vxy + c2) /
               ((ux * ux + uy * uy + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

std::vector<double> lum709(const ImageBuffer& img) {
  std::vector<double> out(static_cast<size_t>(img.width) * img.height);
  const double* r = img.plane(0);
  const double* gg = img.plane(1);
  const double* b = img.plane(2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = 0.2126 * r[i] + 0.7152 * gg[i] + 0.0722 * b[i];
  return out;
}

}  // namespace

TEST_CASE("mse matches a direct sum and rejects shape mismatches") {
  const ImageBuffer a = random_image(13, 9, 3, 41);
  const ImageBuffer b = random_image(13, 9, 3, 42);
  CHECK(mse(a, b) == doctest::Approx(mse_oracle(a, b)).epsilon(1e-12));
  CHECK(mse(a, a) == 0.0);
  CHECK_THROWS_AS(mse(a, random_image(9, 13, 3, 1)), Error);
  CHECK_THROWS_AS(mse(a, random_image(13, 9, 1, 1)), Error);
}

TEST_CASE("psnr is 10*log10(1/mse) with +inf at equality") {
  const ImageBuffer a = random_image(17, 11, 1, 7);
  const ImageBuffer b = random_image(17, 11, 1, 8);
  CHECK(psnr(a, b) ==
        doctest::Approx(10.0 * std::log10(1.0 / mse_oracle(a, b))).epsilon(1e-12));
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0.0);

  // known distance: constant images differing by 0.1 -> mse 0.01 -> 20 dB
  const ImageBuffer c(12, 12, 1, 0.5), d(12, 12, 1, 0.6);
  CHECK(psnr(c, d) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("ssim of constant images has a closed form") {
  constexpr double c1 = 0.01 * 0.01;
  const ImageBuffer a(16, 16, 1, 0.3), b(16, 16, 1, 0.7);
  // variances vanish, so every window scores (2pq+C1)/(p^2+q^2+C1)
  const double expect = (2.0 * 0.3 * 0.7 + c1) / (0.3 * 0.3 + 0.7 * 0.7 + c1);
  CHECK(ssim(a, b) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches an independent windowed reference") {
  const int w = 32, h = 24;
  const ImageBuffer a = random_image(w, h, 1, 100);
  ImageBuffer b = a;
  Lcg64 rng(101);
  for (double& v : b.data) v = 0.8 * v + 0.2 * rng.next_double();
  CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a.data, b.data, w, h)).epsilon(1e-10));

  // 3-channel input scores its Rec.709 luminance
  const ImageBuffer a3 = random_image(w, h, 3, 102);
  const ImageBuffer b3 = random_image(w, h, 3, 103);
  CHECK(ssim(a3, b3) ==
        doctest::Approx(ssim_oracle(lum709(a3), lum709(b3), w, h)).epsilon(1e-10));
}

TEST_CASE("ssim rejects images smaller than the window") {
  const ImageBuffer a = random_image(10, 16, 1, 1);
  CHECK_THROWS_AS(ssim(a, a), Error);
}

TEST_CASE("ssim gradient matches central differences") {
  const int w = 16, h = 14;
  ImageBuffer a = random_image(w, h, 1, 200);
  const ImageBuffer b = random_image(w, h, 1, 201);
  const SsimWithGrad sg = ssim_with_grad(a, b);
  CHECK(sg.value == doctest::Approx(ssim(a, b)).epsilon(1e-15));
  CHECK(sg.grad.width == w);
  CHECK(sg.grad.height == h);

  const double step = 1e-5;
  Lcg64 pick(202);
  for (int trial = 0; trial < 12; ++trial) {
    const size_t i = static_cast<size_t>(pick.next_double() * a.data.size());
    const double keep = a.data[i];
    a.data[i] = keep + step;
    const double up = ssim(a, b);
    a.data[i] = keep - step;
    const double dn = ssim(a, b);
    a.data[i] = keep;
    const double fd = (up - dn) / (2.0 * step);
    CHECK(sg.grad.data[i] ==
          doctest::Approx(fd).epsilon(1e-5).scale(std::max(1e-8, std::fabs(fd))));
  }
}

TEST_CASE("3-channel ssim gradient chains through the luminance weights") {
  const ImageBuffer a = random_image(18, 15, 3, 300);
  const ImageBuffer b = random_image(18, 15, 3, 301);
  const SsimWithGrad sg = ssim_with_grad(a, b);
  REQUIRE(sg.grad.channels == 3);
  const size_t n = static_cast<size_t>(sg.grad.width) * sg.grad.height;
  for (size_t i = 0; i < n; i += 17) {
    const double base = sg.grad.plane(0)[i] / 0.2126;
    CHECK(sg.grad.plane(1)[i] == doctest::Approx(0.7152 * base).epsilon(1e-12));
    CHECK(sg.grad.plane(2)[i] == doctest::Approx(0.0722 * base).epsilon(1e-12));
  }

  // and finite differences still hold per channel
  ImageBuffer pa = a;
  const double step = 1e-5;
  const size_t probe = 7 * 18 + 9;
  double* g1 = pa.plane(1);
  const double keep = g1[probe];
  g1[probe] = keep + step;
  const double up = ssim(pa, b);
  g1[probe] = keep - step;
  const double dn = ssim(pa, b);
  const double fd = (up - dn) / (2.0 * step);
  CHECK(sg.grad.plane(1)[probe] ==
        doctest::Approx(fd).epsilon(1e-5).scale(std::max(1e-8, std::fabs(fd))));
}

TEST_CASE("serial metrics reproduce the parallel results exactly") {
  const ImageBuffer a = random_image(40, 33, 3, 500);
  const ImageBuffer b = random_image(40, 33, 3, 501);
  CHECK(serial::mse(a, b) == mse(a, b));
  CHECK(serial::ssim(a, b) == ssim(a, b));
}
