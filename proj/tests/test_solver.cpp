#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "flare/error.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"
#include "flare/solver.hpp"

using namespace flare;

namespace {

ImageBuffer random_image(int w, int h, int ch, uint64_t seed) {
  ImageBuffer img(w, h, ch);
  Lcg64 rng(seed);
  for (double& v : img.data) v = rng.next_double();
  return img;
}

// the quantity gradients() differentiates: scheduled data loss plus the TV
// penalty on the squashed pixel estimate, brightness scalars pinned
double objective(const SolverState& st, const ImageBuffer& r, const Mask& m_s,
                 const BolParams& bol, const ImageBuffer& lmap, const ImageBuffer& y,
                 const SolverConfig& cfg, const BolScalars& frozen) {
  const EstimateParts parts = forward_estimate(st, r, m_s, bol, lmap, &frozen);
  return loss(parts.y_hat, y, st.iter, cfg) + cfg.tv_weight * tv_term(parts.d_image);
}

}  // namespace

TEST_CASE("soft_clamp is a near-identity squash with matching derivative") {
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    CHECK(std::fabs(soft_clamp(x) - x) <= 3.5e-4);
  }

  // saturates just outside the unit range instead of pinching it
  CHECK(soft_clamp(100.0) <= 1.25);
  CHECK(soft_clamp(100.0) > 1.2);
  CHECK(soft_clamp(-100.0) >= -0.25);
  CHECK(soft_clamp(-100.0) < -0.2);

  double prev = soft_clamp(-1.0);
  for (double x = -0.95; x < 2.0; x += 0.05) {
    const double v = soft_clamp(x);
    CHECK(v > prev);
    prev = v;
  }

  for (double x : {-0.5, -0.1, 0.0, 0.3, 0.9, 1.0, 1.3}) {
    const double h = 1e-6;
    const double fd = (soft_clamp(x + h) - soft_clamp(x - h)) / (2.0 * h);
    CHECK(soft_clamp_grad(x) == doctest::Approx(fd).epsilon(1e-6));
    CHECK(soft_clamp_grad(x) > 0.0);
  }

  const ImageBuffer img = random_image(6, 5, 1, 1);
  const ImageBuffer sq = soft_clamp(img);
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(sq.data[i] == soft_clamp(img.data[i]));
}

TEST_CASE("tv_term matches the Charbonnier closed form on a step edge") {
  CHECK(tv_term(ImageBuffer(8, 8, 1, 0.4)) == 0.0);

  ImageBuffer step(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) step.at(x, y, 0) = x < 4 ? 0.2 : 0.8;
  // eight horizontal jumps of 0.6, zero-diff pairs contribute nothing
  const double eps = 1e-3;
  const double expect = 8.0 * (std::sqrt(0.36 + eps * eps) - eps) / 64.0;
  CHECK(tv_term(step) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("data loss switches from MSE to MSE plus structural penalty") {
  const ImageBuffer a = random_image(16, 16, 1, 5);
  const ImageBuffer b = random_image(16, 16, 1, 6);
  SolverConfig cfg;
  cfg.mse_only_iters = 100;

  CHECK(loss(a, b, 0, cfg) == mse(a, b));
  CHECK(loss(a, b, 99, cfg) == mse(a, b));
  const double after = loss(a, b, 100, cfg);
  CHECK(after == doctest::Approx(mse(a, b) + 1.0 - ssim(a, b)).epsilon(1e-15));
  // the scheduled jump is exactly the structural penalty
  CHECK(after - loss(a, b, 99, cfg) ==
        doctest::Approx(1.0 - ssim(a, b)).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences in both loss phases") {
  const int n = 16;
  ImageBuffer r = random_image(n, n, 1, 10);
  for (double& v : r.data) v *= 0.6;
  Mask m_s(n, n, 0.0);
  for (int y = 6; y <= 8; ++y)
    for (int x = 6; x <= 8; ++x) {
      m_s.at(x, y) = 1.0;
      r.at(x, y, 0) = 1.0;
    }
  const ImageBuffer lmap(n, n, 1, 0.0);
  const ImageBuffer y = random_image(n, n, 1, 11);

  SolverConfig cfg;
  cfg.mse_only_iters = 5;
  cfg.tv_weight = 1e-3;
  const BolParams bol;

  SolverState st;
  st.d_pixels = random_image(n, n, 1, 12);
  st.kernel_logits = KernelParams::init(7, 13);

  const BolScalars frozen = forward_estimate(st, r, m_s, bol, lmap).scalars;
  const double h = 1e-5;

  for (int iter : {0, 5}) {
    CAPTURE(iter);
    st.iter = iter;
    const GradientRecord rec = gradients(st, r, m_s, bol, lmap, y, cfg, &frozen);
    CHECK(rec.loss_value + rec.tv_value ==
          doctest::Approx(objective(st, r, m_s, bol, lmap, y, cfg, frozen))
              .epsilon(1e-12));

    Lcg64 pick(40 + iter);
    for (int t = 0; t < 8; ++t) {
      const size_t i = static_cast<size_t>(pick.next_double() * st.d_pixels.size());
      const double keep = st.d_pixels.data[i];
      st.d_pixels.data[i] = keep + h;
      const double up = objective(st, r, m_s, bol, lmap, y, cfg, frozen);
      st.d_pixels.data[i] = keep - h;
      const double dn = objective(st, r, m_s, bol, lmap, y, cfg, frozen);
      st.d_pixels.data[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(rec.d_pixels.data[i] ==
            doctest::Approx(fd).epsilon(1e-4).scale(std::max(1e-8, std::fabs(fd))));
    }

    for (int t = 0; t < 6; ++t) {
      const size_t i =
          static_cast<size_t>(pick.next_double() * st.kernel_logits.logits.size());
      const double keep = st.kernel_logits.logits[i];
      st.kernel_logits.logits[i] = keep + h;
      const double up = objective(st, r, m_s, bol, lmap, y, cfg, frozen);
      st.kernel_logits.logits[i] = keep - h;
      const double dn = objective(st, r, m_s, bol, lmap, y, cfg, frozen);
      st.kernel_logits.logits[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      CHECK(rec.kernel_logits[i] ==
            doctest::Approx(fd).epsilon(1e-4).scale(std::max(1e-8, std::fabs(fd))));
    }
  }
}

TEST_CASE("cached-spectrum gradients agree with the direct path") {
  const int n = 16;
  ImageBuffer r = random_image(n, n, 1, 20);
  Mask m_s(n, n, 0.0);
  for (int y = 5; y <= 7; ++y)
    for (int x = 9; x <= 11; ++x) {
      m_s.at(x, y) = 1.0;
      r.at(x, y, 0) = 1.0;
    }
  ImageBuffer masked(n, n, 1, 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) masked.at(x, y, 0) = r.at(x, y, 0) * m_s.at(x, y);

  const ImageBuffer lmap(n, n, 1, 0.0);
  const ImageBuffer y = random_image(n, n, 1, 21);
  SolverConfig cfg;
  cfg.mse_only_iters = 0;
  const BolParams bol;

  SolverState st;
  st.d_pixels = random_image(n, n, 1, 22);
  st.kernel_logits = KernelParams::init(7, 23);
  st.iter = 1;

  const FftConvPlan plan(masked, 7);
  const GradientRecord direct = gradients(st, r, m_s, bol, lmap, y, cfg);
  const GradientRecord cached =
      gradients(st, r, m_s, bol, lmap, y, cfg, nullptr, &plan);

  CHECK(cached.loss_value == doctest::Approx(direct.loss_value).epsilon(1e-12));
  for (size_t i = 0; i < direct.d_pixels.data.size(); ++i)
    CHECK(cached.d_pixels.data[i] ==
          doctest::Approx(direct.d_pixels.data[i]).scale(1.0).epsilon(1e-9));
  for (size_t i = 0; i < direct.kernel_logits.size(); ++i)
    CHECK(cached.kernel_logits[i] ==
          doctest::Approx(direct.kernel_logits[i]).scale(1.0).epsilon(1e-9));
}

TEST_CASE("disabled or sourceless rendering zeroes the glow branch") {
  const int n = 16;
  ImageBuffer r = random_image(n, n, 1, 30);
  Mask m_s(n, n, 0.0);
  m_s.at(8, 8) = 1.0;
  const ImageBuffer lmap(n, n, 1, 0.0);
  const BolParams bol;

  SolverState st;
  st.d_pixels = random_image(n, n, 1, 31);
  st.kernel_logits = KernelParams::init(5, 32);

  const EstimateParts off =
      forward_estimate(st, r, m_s, bol, lmap, nullptr, nullptr, false);
  CHECK(!off.psfr_active);
  for (double v : off.glow.data) CHECK(v == 0.0);

  const EstimateParts empty = forward_estimate(st, r, Mask(n, n, 0.0), bol, lmap);
  CHECK(!empty.psfr_active);

  SolverConfig cfg;
  const GradientRecord rec = gradients(st, r, m_s, bol, lmap, r, cfg, nullptr,
                                       nullptr, false);
  for (double v : rec.kernel_logits) CHECK(v == 0.0);
}

TEST_CASE("run rejects inconsistent configuration") {
  const ImageBuffer r = random_image(24, 24, 1, 40);
  const OpticalConfig oc{12.0, 12.0};
  const BolParams bol;
  const PipelineParams pipe;

  SolverConfig bad;
  bad.iterations = 10;
  bad.mse_only_iters = 20;
  CHECK_THROWS_AS(run(r, bad, oc, bol, pipe), Error);

  SolverConfig lr;
  lr.learning_rate = 0.0;
  CHECK_THROWS_AS(run(r, lr, oc, bol, pipe), Error);

  SolverConfig ok;
  ok.iterations = 1;
  ok.mse_only_iters = 0;
  const ImageBuffer wrong_gt = random_image(23, 24, 1, 41);
  CHECK_THROWS_AS(run(r, ok, oc, bol, pipe, &wrong_gt), Error);
  CHECK_THROWS_AS(run(ImageBuffer(), ok, oc, bol, pipe), Error);
}

TEST_CASE("full pipeline runs, reports, and repeats bit for bit") {
  const int n = 48;
  ImageBuffer clean(n, n, 3);
  Lcg64 rng(50);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double base = 0.15 + 0.25 * (x + y) / (2.0 * n);
      for (int c = 0; c < 3; ++c)
        clean.at(x, y, c) = base + 0.1 * rng.next_double();
    }

  OpticalConfig oc;
  oc.center_x = 24.0;
  oc.center_y = 24.0;
  SynthParams sp;
  sp.inject_source = true;
  sp.inject_x = 14.0;
  sp.inject_y = 16.0;
  sp.inject_radius = 3.0;
  sp.inject_intensity = 1.0;
  sp.peak_sigma = 0.8;
  sp.halo_sigma = 2.0;
  const SynthResult syn = synth_pair(clean, oc, sp, 7);

  SolverConfig cfg;
  cfg.iterations = 40;
  cfg.mse_only_iters = 20;
  cfg.kernel_size = 7;
  cfg.log_every = 1000;
  cfg.seed = 7;
  const BolParams bol;
  PipelineParams pipe;

  const RunResult a = run(syn.flared, cfg, oc, bol, pipe, &syn.clean, "case");

  CHECK(a.report.loss_history.size() == 40);
  CHECK(a.report.tv_history.size() == 40);
  CHECK(a.report.psnr_in.has_value());
  CHECK(a.report.psnr_out.has_value());
  CHECK(a.report.ssim_in.has_value());
  CHECK(a.report.ssim_out.has_value());
  CHECK(a.report.wall_ms_per_stage.size() == 5);
  CHECK(a.report.wall_ms_per_stage[0].first == "detect");
  CHECK(a.report.wall_ms_per_stage[4].first == "total");
  CHECK(a.scene.ideal.same_dims(syn.flared));
  for (double v : a.scene.ideal.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(a.pseudo_target.same_dims(syn.flared));
  CHECK(a.scene.source_mask.any());

  const RunResult b = run(syn.flared, cfg, oc, bol, pipe, &syn.clean, "case");
  CHECK(a.scene.ideal.data == b.scene.ideal.data);
  CHECK(a.pseudo_target.data == b.pseudo_target.data);
  CHECK(a.report.loss_history == b.report.loss_history);
}
