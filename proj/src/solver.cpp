#include "flare/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "flare/inpaint.hpp"
#include "flare/light_source.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"

namespace flare {

namespace {

constexpr double kSquashSharpness = 20.0;
constexpr double kSquashMargin = 0.25;
constexpr double kTvEps = 1e-3;

double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

void check_finite(const std::vector<double>& v, const char* stage) {
  for (double x : v)
    if (!std::isfinite(x))
      throw Error(ErrorKind::NonFinite, std::string("non-finite value in ") + stage);
}

ImageBuffer masked_image(const ImageBuffer& img, const Mask& m) {
  ImageBuffer out(img.width, img.height, img.channels, 0.0);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out.at(x, y, c) = img.at(x, y, c) * m.at(x, y);
  return out;
}

// gradient of tv_term with respect to the image, same normalization
ImageBuffer tv_gradient(const ImageBuffer& img) {
  ImageBuffer g(img.width, img.height, img.channels, 0.0);
  const double n = static_cast<double>(img.size());
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (x + 1 < img.width) {
          const double t = img.at(x + 1, y, c) - img.at(x, y, c);
          const double w = t / std::sqrt(t * t + kTvEps * kTvEps) / n;
          g.at(x + 1, y, c) += w;
          g.at(x, y, c) -= w;
        }
        if (y + 1 < img.height) {
          const double t = img.at(x, y + 1, c) - img.at(x, y, c);
          const double w = t / std::sqrt(t * t + kTvEps * kTvEps) / n;
          g.at(x, y + 1, c) += w;
          g.at(x, y, c) -= w;
        }
      }
    }
  }
  return g;
}

class StageTimer {
 public:
  explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& name, F&& fn) -> decltype(fn()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto result = fn();
      record(name, t0);
      return result;
    } catch (const Error& e) {
      throw Error(e.kind(), "stage " + name + ": " + e.what());
    }
  }

 private:
  void record(const std::string& name,
              std::chrono::steady_clock::time_point t0) {
    const auto t1 = std::chrono::steady_clock::now();
    sink_.emplace_back(name,
                       std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::vector<std::pair<std::string, double>>& sink_;
};

}  // namespace

double soft_clamp(double x) {
  const double k = kSquashSharpness, m = kSquashMargin;
  return x - softplus(k * (x - 1.0 - m)) / k + softplus(-k * (x + m)) / k;
}

double soft_clamp_grad(double x) {
  const double k = kSquashSharpness, m = kSquashMargin;
  return 1.0 - sigmoid(k * (x - 1.0 - m)) - sigmoid(-k * (x + m));
}

ImageBuffer soft_clamp(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (double& v : out.data) v = soft_clamp(v);
  return out;
}

double tv_term(const ImageBuffer& img) {
  const double n = static_cast<double>(img.size());
  double sum = 0.0;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        if (x + 1 < img.width) {
          const double t = img.at(x + 1, y, c) - img.at(x, y, c);
          sum += std::sqrt(t * t + kTvEps * kTvEps) - kTvEps;
        }
        if (y + 1 < img.height) {
          const double t = img.at(x, y + 1, c) - img.at(x, y, c);
          sum += std::sqrt(t * t + kTvEps * kTvEps) - kTvEps;
        }
      }
  return sum / n;
}

EstimateParts forward_estimate(const SolverState& state, const ImageBuffer& r,
                               const Mask& m_s, const BolParams& bol,
                               const ImageBuffer& light_map, const BolScalars* frozen,
                               const FftConvPlan* plan, bool use_psfr) {
  if (!state.d_pixels.same_dims(r) || !light_map.same_dims(r) || !m_s.matches(r))
    throw Error(ErrorKind::Dimension, "forward_estimate: dims disagree");

  EstimateParts parts;
  parts.d_image = soft_clamp(state.d_pixels);
  parts.psfr_active = use_psfr && m_s.any();

  if (parts.psfr_active) {
    parts.kernel = gen_kernel(state.kernel_logits);
    ImageBuffer b_l = plan ? plan->convolve(parts.kernel)
                           : render_prior_glow(r, m_s, parts.kernel);
    if (frozen) {
      parts.scalars = *frozen;
      parts.glow = scale(b_l, parts.scalars.total());
    } else {
      parts.glow = apply_bol(b_l, r, m_s, bol, &parts.scalars);
    }
  } else {
    parts.glow = ImageBuffer(r.width, r.height, r.channels, 0.0);
  }

  parts.u = parts.d_image;
  for (size_t i = 0; i < parts.u.size(); ++i)
    parts.u.data[i] += parts.glow.data[i] + light_map.data[i];
  parts.y_hat = soft_clamp(parts.u);
  return parts;
}

ImageBuffer compose_estimate(const SolverState& state, const ImageBuffer& r,
                             const Mask& m_s, const BolParams& bol,
                             const ImageBuffer& light_map) {
  return forward_estimate(state, r, m_s, bol, light_map).y_hat;
}

double loss(const ImageBuffer& y_hat, const ImageBuffer& y, int iter,
            const SolverConfig& cfg) {
  const double m = mse(y_hat, y);
  if (iter < cfg.mse_only_iters) return m;
  return m + (1.0 - ssim(y_hat, y));
}

GradientRecord gradients(const SolverState& state, const ImageBuffer& r, const Mask& m_s,
                         const BolParams& bol, const ImageBuffer& light_map,
                         const ImageBuffer& y, const SolverConfig& cfg,
                         const BolScalars* frozen, const FftConvPlan* plan,
                         bool use_psfr) {
  const EstimateParts parts =
      forward_estimate(state, r, m_s, bol, light_map, frozen, plan, use_psfr);
  const size_t n = parts.y_hat.size();

  GradientRecord rec;
  rec.loss_value = mse(parts.y_hat, y);

  // dLoss/dy_hat
  std::vector<double> g_yhat(n);
  const double inv_n = 2.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i)
    g_yhat[i] = inv_n * (parts.y_hat.data[i] - y.data[i]);
  if (state.iter >= cfg.mse_only_iters) {
    const SsimWithGrad sw = ssim_with_grad(parts.y_hat, y);
    rec.loss_value += 1.0 - sw.value;
    for (size_t i = 0; i < n; ++i) g_yhat[i] -= sw.grad.data[i];
  }

  // through the outer squash
  ImageBuffer g_u(r.width, r.height, r.channels);
  for (size_t i = 0; i < n; ++i)
    g_u.data[i] = g_yhat[i] * soft_clamp_grad(parts.u.data[i]);

  // pixel parameters: fit term plus TV on the squashed estimate
  rec.d_pixels = ImageBuffer(r.width, r.height, r.channels);
  rec.tv_value = cfg.tv_weight * tv_term(parts.d_image);
  const ImageBuffer tv_g = tv_gradient(parts.d_image);
  for (size_t i = 0; i < n; ++i) {
    const double inner = soft_clamp_grad(state.d_pixels.data[i]);
    rec.d_pixels.data[i] =
        (g_u.data[i] + cfg.tv_weight * tv_g.data[i]) * inner;
  }

  // kernel logits via the convolution adjoint and the softmax Jacobian
  if (parts.psfr_active) {
    ImageBuffer field = g_u;
    const double total = parts.scalars.total();
    for (double& v : field.data) v *= total;
    std::vector<double> g_k =
        plan ? plan->kernel_gradient(field)
             : correlate_kernel_adjoint(field, masked_image(r, m_s),
                                        state.kernel_logits.size);
    rec.kernel_logits = softmax_backward(parts.kernel, g_k);
  } else {
    rec.kernel_logits.assign(state.kernel_logits.logits.size(), 0.0);
  }

  check_finite(rec.d_pixels.data, "pixel gradient");
  check_finite(rec.kernel_logits, "kernel gradient");
  if (!std::isfinite(rec.loss_value) || !std::isfinite(rec.tv_value))
    throw Error(ErrorKind::NonFinite, "non-finite value in loss");
  return rec;
}

RunResult run(const ImageBuffer& r, const SolverConfig& cfg, const OpticalConfig& optics,
              const BolParams& bol, const PipelineParams& pipeline, const ImageBuffer* gt,
              const std::string& input_name) {
  if (r.empty()) throw Error(ErrorKind::Parameter, "run: empty input");
  if (cfg.iterations < 0 || cfg.mse_only_iters < 0 ||
      cfg.mse_only_iters > cfg.iterations)
    throw Error(ErrorKind::Parameter, "run: mse_only_iters must be <= iterations");
  if (!(cfg.learning_rate > 0.0))
    throw Error(ErrorKind::Parameter, "run: learning rate must be positive");
  if (gt && !gt->same_dims(r))
    throw Error(ErrorKind::Dimension, "run: ground truth dims differ from input");

  RunResult out;
  out.report.input = input_name;
  out.report.seed = cfg.seed;
  out.report.iterations = cfg.iterations;
  out.report.mse_only_iters = cfg.mse_only_iters;

  const auto t_total = std::chrono::steady_clock::now();
  StageTimer timer(out.report.wall_ms_per_stage);

  const SourceDetection det = timer.time("detect", [&] {
    return extract_light_mask(r, pipeline.source_percentile, pipeline.source_min_area);
  });
  const ImageBuffer light_map = timer.time("light_map", [&] {
    return weighted_light_map(r, det, pipeline.feather_sigma);
  });

  Mask m_r(r.width, r.height, 0.0);
  ImageBuffer y = timer.time("inpaint", [&] {
    if (!pipeline.use_ostpm || !det.mask.any()) return r;
    m_r = derive_ghost_mask(det.mask, optics.center_x, optics.center_y,
                            pipeline.ghost_dilation);
    if (!m_r.any()) return r;
    return inpaint(r, m_r, pipeline.patch_radius, pipeline.search_window,
                   pipeline.debug_dir);
  });

  SolverState state;
  state.kernel_logits = KernelParams::init(cfg.kernel_size, cfg.seed);

  const bool psfr_active = pipeline.use_psfr && det.mask.any();
  std::unique_ptr<FftConvPlan> plan;
  if (psfr_active)
    plan = std::make_unique<FftConvPlan>(masked_image(r, det.mask), cfg.kernel_size);

  // start the scene layer with the initial glow and the light map already
  // deducted, so the residual at iteration zero is near zero and the split
  // between the layers is shaped by the descent instead of a warm-start bias
  state.d_pixels = y;
  {
    EstimateParts init_parts = forward_estimate(state, r, det.mask, bol, light_map,
                                                nullptr, plan.get(), psfr_active);
    for (size_t i = 0; i < state.d_pixels.size(); ++i)
      state.d_pixels.data[i] -=
          init_parts.glow.data[i] + light_map.data[i];
  }

  // kernel taps see pixel-mean-scaled gradients; undo that imbalance so one
  // learning rate serves both parameter groups
  const double logit_rate =
      static_cast<double>(r.size()) /
      (static_cast<double>(cfg.kernel_size) * cfg.kernel_size);

  timer.time("optimize", [&] {
    for (int iter = 0; iter < cfg.iterations; ++iter) {
      state.iter = iter;
      const GradientRecord rec = gradients(state, r, det.mask, bol, light_map, y, cfg,
                                           nullptr, plan.get(), psfr_active);
      state.loss_history.push_back(rec.loss_value);
      out.report.tv_history.push_back(rec.tv_value);

      const double lr = cfg.learning_rate * std::pow(0.99, iter / 100);
      double scale = 1.0;
      if (cfg.grad_clip > 0.0) {
        double gmax = 0.0;
        for (double v : rec.d_pixels.data) gmax = std::max(gmax, std::fabs(v));
        if (gmax > cfg.grad_clip) scale = cfg.grad_clip / gmax;
      }
      for (size_t i = 0; i < state.d_pixels.size(); ++i)
        state.d_pixels.data[i] -= lr * scale * rec.d_pixels.data[i];
      if (psfr_active)
        for (size_t i = 0; i < state.kernel_logits.logits.size(); ++i)
          state.kernel_logits.logits[i] -= lr * scale * logit_rate * rec.kernel_logits[i];

      check_finite(state.d_pixels.data, "parameter update");
      check_finite(state.kernel_logits.logits, "kernel update");
    }
    state.iter = cfg.iterations;
    return 0;
  });

  const EstimateParts final_parts = forward_estimate(
      state, r, det.mask, bol, light_map, nullptr, plan.get(), psfr_active);

  out.scene.ideal = soft_clamp(state.d_pixels);
  for (size_t i = 0; i < out.scene.ideal.size(); ++i)
    out.scene.ideal.data[i] = clamp01(out.scene.ideal.data[i] + light_map.data[i]);
  out.scene.glow = final_parts.glow;
  out.scene.ghost = r;
  for (size_t i = 0; i < out.scene.ghost.size(); ++i)
    out.scene.ghost.data[i] -= y.data[i];
  out.scene.source_mask = det.mask;
  out.scene.ghost_mask = m_r;
  out.pseudo_target = y;

  if (gt) {
    out.report.psnr_in = psnr(r, *gt);
    out.report.psnr_out = psnr(out.scene.ideal, *gt);
    out.report.ssim_in = ssim(r, *gt);
    out.report.ssim_out = ssim(out.scene.ideal, *gt);
  }
  out.report.loss_history = state.loss_history;
  const auto t1 = std::chrono::steady_clock::now();
  out.report.wall_ms_per_stage.emplace_back(
      "total", std::chrono::duration<double, std::milli>(t1 - t_total).count());
  out.state = std::move(state);
  return out;
}

}  // namespace flare
