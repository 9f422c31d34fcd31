#include <doctest.h>

#include <cmath>
#include <vector>

#include "flare/convolve.hpp"
#include "flare/rng.hpp"
#include "flare/serial_ref.hpp"

using namespace flare;

namespace {

ImageBuffer random_image(int w, int h, int ch, Lcg64& rng) {
  ImageBuffer img(w, h, ch);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

// independently written mirror lookup (reflect without edge repeat)
double sample(const ImageBuffer& img, int x, int y, int c, Padding padding) {
  if (padding == Padding::Zero) {
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) return 0.0;
    return img.at(x, y, c);
  }
  auto mirror = [](int i, int n) {
    const int period = 2 * n - 2;
    i = std::abs(i) % period;
    return i < n ? i : period - i;
  };
  return img.at(mirror(x, img.width), mirror(y, img.height), c);
}

// convolution straight from the definition
ImageBuffer conv_oracle(const ImageBuffer& img, const FlareKernel& k, Padding padding) {
  const int r = k.size / 2;
  ImageBuffer out(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int j = 0; j < k.size; ++j)
          for (int i = 0; i < k.size; ++i)
            acc += k.at(i, j) * sample(img, x - (i - r), y - (j - r), c, padding);
        out.at(x, y, c) = acc;
      }
  return out;
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
  REQUIRE(a.same_dims(b));
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("hand-checked 3x3 convolution values") {
  // 4x4 single-channel ramp, kernel weighted toward one corner
  ImageBuffer img(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y, 0) = y * 4 + x;
  FlareKernel k = FlareKernel::normalized(3, {4, 0, 0, 0, 2, 0, 0, 0, 2});

  // center pixel (1,1): conv flips the kernel, so weight 4/8 hits img(2,2)=10,
  // 2/8 hits img(1,1)=5 and 2/8 hits img(0,0)=0
  const ImageBuffer out = convolve2d(img, k, ConvMethod::Direct, Padding::Reflect);
  CHECK(out.at(1, 1, 0) == doctest::Approx((4.0 * 10 + 2 * 5 + 2 * 0) / 8).epsilon(1e-12));
  // corner pixel (0,0) under mirror padding: (-1,-1) maps back to (1,1)
  CHECK(out.at(0, 0, 0) == doctest::Approx((4.0 * 5 + 2 * 0 + 2 * 5) / 8).epsilon(1e-12));

  const ImageBuffer outz = convolve2d(img, k, ConvMethod::Direct, Padding::Zero);
  CHECK(outz.at(0, 0, 0) == doctest::Approx((4.0 * 5 + 2 * 0 + 2 * 0) / 8).epsilon(1e-12));
  // (3,3): weight 4/8 would need img(4,4), zero outside the frame
  CHECK(outz.at(3, 3, 0) == doctest::Approx((2.0 * 15 + 2 * 10) / 8).epsilon(1e-12));
}

TEST_CASE("direct convolution matches the definition oracle") {
  Lcg64 rng(21);
  for (Padding p : {Padding::Reflect, Padding::Zero}) {
    const ImageBuffer img = random_image(17, 13, 3, rng);
    const FlareKernel k = FlareKernel::gaussian(7, 1.3);
    CHECK(max_abs_diff(convolve2d(img, k, ConvMethod::Direct, p), conv_oracle(img, k, p)) <
          1e-12);
  }
}

TEST_CASE("frequency and direct methods agree") {
  Lcg64 rng(22);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ImageBuffer img = random_image(64, 64, 1, rng);
    FlareKernel k = FlareKernel::uniform(31);
    for (double& w : k.weights) w = rng.next_double();
    k = FlareKernel::normalized(31, k.weights);
    for (Padding p : {Padding::Reflect, Padding::Zero}) {
      worst = std::max(worst, max_abs_diff(convolve2d(img, k, ConvMethod::Direct, p),
                                           convolve2d(img, k, ConvMethod::Frequency, p)));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("delta kernel is the identity") {
  Lcg64 rng(23);
  const ImageBuffer img = random_image(12, 9, 3, rng);
  const ImageBuffer out = convolve2d(img, FlareKernel::delta(5), ConvMethod::Direct);
  CHECK(max_abs_diff(img, out) < 1e-12);
}

TEST_CASE("plan convolution is bit-identical to the one-shot path") {
  Lcg64 rng(24);
  const ImageBuffer img = random_image(40, 32, 3, rng);
  FlareKernel k = FlareKernel::gaussian(9, 2.0);
  const FftConvPlan plan(img, 9);
  const ImageBuffer a = plan.convolve(k);
  const ImageBuffer b = convolve2d(img, k, ConvMethod::Frequency, Padding::Reflect);
  for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("kernel adjoint matches finite differences of the convolution") {
  // J(k) = <field, img * k>; dJ/dk from the adjoint vs central differences
  Lcg64 rng(25);
  const int ks = 5;
  const ImageBuffer img = random_image(16, 16, 3, rng);
  const ImageBuffer field = random_image(16, 16, 3, rng);

  // inline convolution so weights need not sum to 1 under perturbation
  auto objective = [&](const std::vector<double>& w) {
    const int r = ks / 2;
    double s = 0.0;
    for (int c = 0; c < img.channels; ++c)
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          double acc = 0.0;
          for (int j = 0; j < ks; ++j)
            for (int i = 0; i < ks; ++i)
              acc += w[j * ks + i] *
                     sample(img, x - (i - r), y - (j - r), c, Padding::Reflect);
          s += field.at(x, y, c) * acc;
        }
    return s;
  };

  const std::vector<double> grad =
      correlate_kernel_adjoint(field, img, ks, Padding::Reflect);
  REQUIRE(grad.size() == static_cast<size_t>(ks * ks));

  std::vector<double> base(ks * ks, 1.0 / (ks * ks));
  const double h = 1e-4;
  for (int i = 0; i < ks * ks; ++i) {
    std::vector<double> wp = base, wm = base;
    wp[i] += h;
    wm[i] -= h;
    const double fd = (objective(wp) - objective(wm)) / (2 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("plan kernel gradient is bit-identical to the standalone adjoint") {
  Lcg64 rng(26);
  const ImageBuffer img = random_image(24, 24, 3, rng);
  const ImageBuffer field = random_image(24, 24, 3, rng);
  const FftConvPlan plan(img, 7);
  const std::vector<double> a = plan.kernel_gradient(field);
  const std::vector<double> b = correlate_kernel_adjoint(field, img, 7, Padding::Reflect);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("serial reference convolution is byte-identical to the parallel path") {
  Lcg64 rng(27);
  const ImageBuffer img = random_image(33, 29, 3, rng);
  const FlareKernel k = FlareKernel::gaussian(11, 2.4);
  for (Padding p : {Padding::Reflect, Padding::Zero}) {
    const ImageBuffer par = convolve2d(img, k, ConvMethod::Direct, p);
    const ImageBuffer ser = serial::convolve2d(img, k, p);
    for (size_t i = 0; i < par.data.size(); ++i) CHECK(par.data[i] == ser.data[i]);
  }
}

TEST_CASE("oversized kernels are rejected") {
  ImageBuffer img(8, 8, 1, 0.1);
  CHECK_THROWS_AS(convolve2d(img, FlareKernel::uniform(9), ConvMethod::Direct), Error);
  CHECK_THROWS_AS(FftConvPlan(img, 9), Error);
  CHECK_THROWS_AS(FftConvPlan(img, 4), Error);
}
