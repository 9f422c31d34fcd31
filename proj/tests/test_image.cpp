#include <doctest.h>

#include <numeric>

#include "flare/image.hpp"

using namespace flare;

TEST_CASE("image buffer layout is planar") {
  ImageBuffer img(4, 3, 3, 0.0);
  img.at(1, 2, 0) = 0.5;
  img.at(1, 2, 1) = 0.75;
  CHECK(img.data[2 * 4 + 1] == 0.5);
  CHECK(img.data[4 * 3 + 2 * 4 + 1] == 0.75);
  CHECK(img.plane(1)[2 * 4 + 1] == 0.75);
  CHECK(img.size() == 36);
  CHECK_THROWS_AS(ImageBuffer(4, 3, 2), Error);
}

TEST_CASE("kernel constructors normalize and validate") {
  CHECK_THROWS_AS(FlareKernel::uniform(4), Error);  // even size

  const FlareKernel d = FlareKernel::delta(5);
  CHECK(d.weights[2 * 5 + 2] == 1.0);
  CHECK(std::accumulate(d.weights.begin(), d.weights.end(), 0.0) == 1.0);

  const FlareKernel u = FlareKernel::uniform(7);
  for (double w : u.weights) CHECK(w == doctest::Approx(1.0 / 49).epsilon(1e-12));

  const FlareKernel g = FlareKernel::gaussian(9, 1.7);
  double sum = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  // symmetric and peaked at the center
  CHECK(g.weights[4 * 9 + 4] > g.weights[0]);
  CHECK(g.weights[1 * 9 + 3] == doctest::Approx(g.weights[7 * 9 + 5]).epsilon(1e-12));
}

TEST_CASE("self_convolve matches direct polynomial convolution") {
  // oracle: convolve the two weight grids by the definition
  const FlareKernel k = FlareKernel::gaussian(5, 1.0);
  const FlareKernel k2 = k.self_convolve(2);
  CHECK(k2.size == 9);

  std::vector<double> expect(9 * 9, 0.0);
  for (int ay = 0; ay < 5; ++ay)
    for (int ax = 0; ax < 5; ++ax)
      for (int by = 0; by < 5; ++by)
        for (int bx = 0; bx < 5; ++bx)
          expect[(ay + by) * 9 + (ax + bx)] += k.weights[ay * 5 + ax] * k.weights[by * 5 + bx];
  for (int i = 0; i < 81; ++i)
    CHECK(k2.weights[i] == doctest::Approx(expect[i]).epsilon(1e-12));

  const FlareKernel k1 = k.self_convolve(1);
  CHECK(k1.size == 5);
  for (int i = 0; i < 25; ++i) CHECK(k1.weights[i] == k.weights[i]);
}

TEST_CASE("luminance uses the HD video weights") {
  ImageBuffer img(1, 1, 3);
  img.at(0, 0, 0) = 0.25;
  img.at(0, 0, 1) = 0.5;
  img.at(0, 0, 2) = 0.75;
  const ImageBuffer lum = luminance(img);
  CHECK(lum.channels == 1);
  CHECK(lum.at(0, 0, 0) ==
        doctest::Approx(0.2126 * 0.25 + 0.7152 * 0.5 + 0.0722 * 0.75).epsilon(1e-12));

  // single channel passes through
  ImageBuffer gray(2, 1, 1);
  gray.at(0, 0, 0) = 0.3;
  CHECK(luminance(gray).at(0, 0, 0) == 0.3);
}

TEST_CASE("add and scale do not clamp") {
  ImageBuffer a(2, 1, 1), b(2, 1, 1);
  a.at(0, 0, 0) = 0.9;
  b.at(0, 0, 0) = 0.9;
  a.at(1, 0, 0) = -0.2;
  b.at(1, 0, 0) = -0.2;
  const ImageBuffer s = add(a, b);
  CHECK(s.at(0, 0, 0) == doctest::Approx(1.8));
  CHECK(s.at(1, 0, 0) == doctest::Approx(-0.4));
  const ImageBuffer sc = scale(a, 3.0);
  CHECK(sc.at(0, 0, 0) == doctest::Approx(2.7));
  const ImageBuffer cl = clamp_image(s);
  CHECK(cl.at(0, 0, 0) == 1.0);
  CHECK(cl.at(1, 0, 0) == 0.0);
}

TEST_CASE("mask dilation grows by chebyshev distance") {
  Mask m(7, 7, 0.0);
  m.at(3, 3) = 1.0;
  const Mask d1 = dilate(m, 1);
  int count = 0;
  for (double v : d1.data) count += v != 0.0;
  CHECK(count == 9);
  CHECK(d1.at(2, 2) == 1.0);
  CHECK(d1.at(4, 4) == 1.0);
  CHECK(d1.at(1, 3) == 0.0);

  const Mask d0 = dilate(m, 0);
  int count0 = 0;
  for (double v : d0.data) count0 += v != 0.0;
  CHECK(count0 == 1);
}
