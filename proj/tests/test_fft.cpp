#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "flare/fft.hpp"
#include "flare/rng.hpp"

using namespace flare;

namespace {

// quadratic-time DFT straight from the definition
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& a,
                                      bool inverse) {
  const size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (size_t j = 0; j < n; ++j)
      acc += a[j] * std::polar(1.0, sign * 2.0 * M_PI * k * j / n);
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

}  // namespace

TEST_CASE("next_pow2") {
  CHECK(fft::next_pow2(1) == 1);
  CHECK(fft::next_pow2(2) == 2);
  CHECK(fft::next_pow2(3) == 4);
  CHECK(fft::next_pow2(64) == 64);
  CHECK(fft::next_pow2(65) == 128);
}

TEST_CASE("forward transform matches the quadratic dft") {
  Lcg64 rng(31);
  std::vector<std::complex<double>> a(64);
  for (auto& v : a) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const auto expect = dft(a, false);
  auto got = a;
  fft::transform(got, false);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(got[i].real() - expect[i].real()) < 1e-9);
    CHECK(std::abs(got[i].imag() - expect[i].imag()) < 1e-9);
  }
}

TEST_CASE("inverse round-trips within 1e-12") {
  Lcg64 rng(32);
  std::vector<std::complex<double>> a(128);
  for (auto& v : a) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  auto b = a;
  fft::transform(b, false);
  fft::transform(b, true);
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(b[i] - a[i]) < 1e-12);
}

TEST_CASE("2-d transform equals row then column passes") {
  Lcg64 rng(33);
  const size_t rows = 8, cols = 16;
  std::vector<std::complex<double>> a(rows * cols);
  for (auto& v : a) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};

  // oracle: dft along rows, then along columns
  std::vector<std::complex<double>> expect = a;
  for (size_t r = 0; r < rows; ++r) {
    std::vector<std::complex<double>> row(expect.begin() + r * cols,
                                          expect.begin() + (r + 1) * cols);
    row = dft(row, false);
    std::copy(row.begin(), row.end(), expect.begin() + r * cols);
  }
  for (size_t c = 0; c < cols; ++c) {
    std::vector<std::complex<double>> col(rows);
    for (size_t r = 0; r < rows; ++r) col[r] = expect[r * cols + c];
    col = dft(col, false);
    for (size_t r = 0; r < rows; ++r) expect[r * cols + c] = col[r];
  }

  auto got = a;
  fft::transform2d(got, rows, cols, false);
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(got[i] - expect[i]) < 1e-9);
}
