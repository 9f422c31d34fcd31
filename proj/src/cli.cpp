#include "flare/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flare/image_io.hpp"
#include "flare/inpaint.hpp"
#include "flare/light_source.hpp"
#include "flare/metrics.hpp"
#include "flare/rng.hpp"

namespace flare {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- logging ------------------------------------------------------------

enum LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("FLARE_LOG");
    if (!env) return kInfo;
    const std::string v = env;
    if (v == "error") return kError;
    if (v == "warn") return kWarn;
    if (v == "info") return kInfo;
    if (v == "debug") return kDebug;
    return kInfo;
  }();
  return level;
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

void logmsg(int lvl, const std::string& msg) {
  if (lvl > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(log_mutex());
  std::fprintf(stderr, "[flare:%s] %s\n", names[lvl], msg.c_str());
}

// usage-level refusal, mapped to exit code 2
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- config -------------------------------------------------------------

template <typename T>
void maybe(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

AppConfig parse_config(const json& j) {
  AppConfig c;
  if (j.contains("optics")) {
    const json& o = j["optics"];
    maybe(o, "center_x", c.optics.center_x);
    maybe(o, "center_y", c.optics.center_y);
    maybe(o, "n1", c.optics.n1);
    maybe(o, "n2", c.optics.n2);
    maybe(o, "ghost_attenuation", c.optics.ghost_attenuation);
    maybe(o, "ghost_blur_sigma", c.optics.ghost_blur_sigma);
    maybe(o, "scatter_alpha", c.optics.scatter_alpha);
    maybe(o, "scatter_orders", c.optics.scatter_orders);
    maybe(o, "order_decay", c.optics.order_decay);
  }
  if (j.contains("synth")) {
    const json& s = j["synth"];
    maybe(s, "scatter_profile", c.synth.scatter_profile);
    maybe(s, "peak_sigma", c.synth.peak_sigma);
    maybe(s, "halo_sigma", c.synth.halo_sigma);
    maybe(s, "gamma_lo", c.synth.gamma_lo);
    maybe(s, "gamma_hi", c.synth.gamma_hi);
    maybe(s, "source_percentile", c.synth.source_percentile);
    maybe(s, "source_min_area", c.synth.source_min_area);
    maybe(s, "inject_source", c.synth.inject_source);
    maybe(s, "inject_x", c.synth.inject_x);
    maybe(s, "inject_y", c.synth.inject_y);
    maybe(s, "inject_radius", c.synth.inject_radius);
    maybe(s, "inject_intensity", c.synth.inject_intensity);
  }
  if (j.contains("bol")) {
    const json& b = j["bol"];
    maybe(b, "mu", c.bol.mu);
    maybe(b, "eta", c.bol.eta);
    maybe(b, "nu", c.bol.nu);
    maybe(b, "percentile", c.bol.percentile);
    maybe(b, "beta_window", c.bol.beta_window);
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    maybe(s, "iterations", c.solver.iterations);
    maybe(s, "mse_only_iters", c.solver.mse_only_iters);
    maybe(s, "learning_rate", c.solver.learning_rate);
    maybe(s, "seed", c.solver.seed);
    maybe(s, "tv_weight", c.solver.tv_weight);
    maybe(s, "log_every", c.solver.log_every);
    maybe(s, "kernel_size", c.solver.kernel_size);
    maybe(s, "grad_clip", c.solver.grad_clip);
  }
  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    maybe(p, "source_percentile", c.pipeline.source_percentile);
    maybe(p, "source_min_area", c.pipeline.source_min_area);
    maybe(p, "ghost_dilation", c.pipeline.ghost_dilation);
    maybe(p, "patch_radius", c.pipeline.patch_radius);
    maybe(p, "search_window", c.pipeline.search_window);
    maybe(p, "feather_sigma", c.pipeline.feather_sigma);
    maybe(p, "use_ostpm", c.pipeline.use_ostpm);
    maybe(p, "use_psfr", c.pipeline.use_psfr);
  }
  maybe(j, "gamma_decode", c.gamma_decode);
  return c;
}

json optics_to_json(const OpticalConfig& o) {
  return json{{"center_x", o.center_x},
              {"center_y", o.center_y},
              {"n1", o.n1},
              {"n2", o.n2},
              {"ghost_attenuation", o.ghost_attenuation},
              {"ghost_blur_sigma", o.ghost_blur_sigma},
              {"scatter_alpha", o.scatter_alpha},
              {"scatter_orders", o.scatter_orders},
              {"order_decay", o.order_decay}};
}

// +inf has no JSON number form; encode the sentinel as a string
json metric_to_json(double v) {
  if (std::isinf(v)) return json("inf");
  return json(v);
}

json opt_metric(const std::optional<double>& v) {
  return v ? metric_to_json(*v) : json(nullptr);
}

json report_to_json(const RunReport& rep) {
  json stages = json::object();
  for (const auto& [name, ms] : rep.wall_ms_per_stage) stages[name] = ms;
  return json{{"input", rep.input},
              {"seed", rep.seed},
              {"iterations", rep.iterations},
              {"mse_only_iters", rep.mse_only_iters},
              {"loss_history", rep.loss_history},
              {"tv_history", rep.tv_history},
              {"psnr_in", opt_metric(rep.psnr_in)},
              {"psnr_out", opt_metric(rep.psnr_out)},
              {"ssim_in", opt_metric(rep.ssim_in)},
              {"ssim_out", opt_metric(rep.ssim_out)},
              {"wall_ms_per_stage", stages},
              {"rng", rep.rng}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << "\n";
}

// ---- path plumbing ------------------------------------------------------

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string strip_suffix(const std::string& stem, const char* suffix) {
  const size_t n = std::string(suffix).size();
  if (stem.size() > n && stem.compare(stem.size() - n, n, suffix) == 0)
    return stem.substr(0, stem.size() - n);
  return stem;
}

std::string base_stem(const std::string& stem) {
  std::string s = strip_suffix(stem, "_flare");
  s = strip_suffix(s, "_D");
  s = strip_suffix(s, "_y");
  return s;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + dir);
}

void check_inputs_exist(const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw UsageError("no input files given");
  for (const std::string& p : inputs)
    if (!fs::exists(p)) throw UsageError("input not found: " + p);
}

void refuse_overwrite(const std::vector<std::string>& outputs, bool force) {
  if (force) return;
  for (const std::string& p : outputs)
    if (fs::exists(p))
      throw UsageError("output exists, pass --force to overwrite: " + p);
}

// resolve the ground-truth file for one input, empty when unavailable
std::string resolve_gt(const std::string& gt_path, const std::string& input,
                       size_t n_inputs) {
  if (gt_path.empty()) return "";
  if (fs::is_directory(gt_path)) {
    const std::string base = base_stem(stem_of(input));
    for (const std::string& cand :
         {gt_path + "/" + base + "_gt.png", gt_path + "/" + base + ".png",
          gt_path + "/" + stem_of(input) + ".png"})
      if (fs::exists(cand)) return cand;
    return "";
  }
  if (n_inputs > 1)
    throw UsageError("--gt is a single file but multiple inputs were given");
  return gt_path;
}

// ---- worker pool ----------------------------------------------------------

template <typename Fn>
void for_each_input(int jobs, size_t n, Fn&& fn) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---- commands -------------------------------------------------------------

int cmd_synth(const RunManifest& m, const AppConfig& cfg) {
  check_inputs_exist(m.inputs);
  ensure_dir(m.output_dir);

  std::vector<std::string> outputs;
  for (const std::string& in : m.inputs) {
    const std::string base = m.output_dir + "/" + stem_of(in);
    outputs.push_back(base + "_flare.png");
    outputs.push_back(base + "_gt.png");
    outputs.push_back(base + "_meta.json");
  }
  refuse_overwrite(outputs, m.force);

  const uint64_t base_seed = m.seed_given ? m.seed : cfg.solver.seed;
  std::vector<json> metas(m.inputs.size());

  for_each_input(m.jobs, m.inputs.size(), [&](size_t i) {
    const std::string& in = m.inputs[i];
    const uint64_t seed = base_seed + i;
    const ImageBuffer clean = load_image(in, cfg.gamma_decode);
    const SynthResult res = synth_pair(clean, cfg.optics, cfg.synth, seed);
    save_image(res.flared, outputs[3 * i], cfg.gamma_decode);
    save_image(res.clean, outputs[3 * i + 1], cfg.gamma_decode);
    json meta{{"input", in},
              {"seed", seed},
              {"gamma", res.gamma},
              {"rng", Lcg64::kName},
              {"optics", optics_to_json(cfg.optics)}};
    write_json(meta, outputs[3 * i + 2]);
    metas[i] = std::move(meta);
    logmsg(kInfo, "synth " + in + " -> " + outputs[3 * i] + " (gamma " +
                      std::to_string(res.gamma) + ")");
  });

  if (m.json_stdout) {
    json out{{"command", "synth"}, {"outputs", metas}};
    std::printf("%s\n", out.dump(2).c_str());
  }
  return 0;
}

int cmd_masks(const RunManifest& m, const AppConfig& cfg) {
  check_inputs_exist(m.inputs);
  ensure_dir(m.output_dir);

  std::vector<std::string> outputs;
  for (const std::string& in : m.inputs) {
    const std::string base = m.output_dir + "/" + stem_of(in);
    outputs.push_back(base + "_ms.png");
    outputs.push_back(base + "_mr.png");
  }
  refuse_overwrite(outputs, m.force);

  std::vector<json> entries(m.inputs.size());
  for_each_input(m.jobs, m.inputs.size(), [&](size_t i) {
    const std::string& in = m.inputs[i];
    const ImageBuffer r = load_image(in, cfg.gamma_decode);
    const SourceDetection det = extract_light_mask(r, cfg.pipeline.source_percentile,
                                                   cfg.pipeline.source_min_area);
    const Mask m_r = derive_ghost_mask(det.mask, cfg.optics.center_x,
                                       cfg.optics.center_y, cfg.pipeline.ghost_dilation);
    save_mask(det.mask, outputs[2 * i]);
    save_mask(m_r, outputs[2 * i + 1]);
    entries[i] = json{{"input", in},
                      {"threshold", det.threshold_used},
                      {"components", det.components.size()},
                      {"source_pixels", det.mask.count_nonzero()},
                      {"ghost_pixels", m_r.count_nonzero()},
                      {"empty", det.empty_warning}};
    if (det.empty_warning) logmsg(kWarn, "no light source found in " + in);
  });

  if (m.json_stdout) {
    json out{{"command", "masks"}, {"images", entries}};
    std::printf("%s\n", out.dump(2).c_str());
  }
  return 0;
}

// joint and deglow share the full solver; deghost stops after inpainting
int cmd_removal(const RunManifest& m, const AppConfig& cfg, bool use_ostpm,
                bool inpaint_only) {
  check_inputs_exist(m.inputs);
  ensure_dir(m.output_dir);

  std::vector<std::string> outputs;
  for (const std::string& in : m.inputs) {
    const std::string base = m.output_dir + "/" + stem_of(in);
    if (!inpaint_only) {
      outputs.push_back(base + "_D.png");
      outputs.push_back(base + "_L.png");
    }
    outputs.push_back(base + "_y.png");
    outputs.push_back(base + "_report.json");
  }
  refuse_overwrite(outputs, m.force);

  SolverConfig solver = cfg.solver;
  if (m.seed_given) solver.seed = m.seed;
  PipelineParams pipeline = cfg.pipeline;
  pipeline.use_ostpm = use_ostpm && cfg.pipeline.use_ostpm;

  std::vector<json> reports(m.inputs.size());
  const int per_image = inpaint_only ? 2 : 4;

  for_each_input(m.jobs, m.inputs.size(), [&](size_t i) {
    const std::string& in = m.inputs[i];
    const std::string* out_base = &outputs[per_image * i];
    const ImageBuffer r = load_image(in, cfg.gamma_decode);
    const std::string gt_file = resolve_gt(m.gt_path, in, m.inputs.size());
    ImageBuffer gt;
    if (!gt_file.empty()) gt = load_image(gt_file, cfg.gamma_decode);

    PipelineParams pp = pipeline;
    if (m.debug_dumps) {
      pp.debug_dir = m.output_dir + "/debug/" + stem_of(in);
      ensure_dir(pp.debug_dir);
    }

    if (inpaint_only) {
      const SourceDetection det = extract_light_mask(r, pp.source_percentile,
                                                     pp.source_min_area);
      ImageBuffer y = r;
      if (det.mask.any()) {
        const Mask m_r = derive_ghost_mask(det.mask, cfg.optics.center_x,
                                           cfg.optics.center_y, pp.ghost_dilation);
        if (m_r.any())
          y = inpaint(r, m_r, pp.patch_radius, pp.search_window, pp.debug_dir);
      }
      save_image(y, out_base[0], cfg.gamma_decode);
      json rep{{"input", in},
               {"psnr_in", gt.empty() ? json(nullptr) : metric_to_json(psnr(r, gt))},
               {"psnr_out", gt.empty() ? json(nullptr) : metric_to_json(psnr(y, gt))},
               {"ssim_in", gt.empty() ? json(nullptr) : metric_to_json(ssim(r, gt))},
               {"ssim_out", gt.empty() ? json(nullptr) : metric_to_json(ssim(y, gt))}};
      write_json(rep, out_base[1]);
      reports[i] = std::move(rep);
    } else {
      const RunResult res = run(r, solver, cfg.optics, cfg.bol, pp,
                                gt.empty() ? nullptr : &gt, in);
      save_image(res.scene.ideal, out_base[0], cfg.gamma_decode);
      save_image(clamp_image(res.scene.glow), out_base[1], cfg.gamma_decode);
      save_image(res.pseudo_target, out_base[2], cfg.gamma_decode);
      json rep = report_to_json(res.report);
      write_json(rep, out_base[3]);
      reports[i] = std::move(rep);
    }
    logmsg(kInfo, "processed " + in);
  });

  // aggregate means over images that had ground truth
  json agg{{"command", inpaint_only ? "deghost" : (use_ostpm ? "joint" : "deglow")},
           {"images", reports}};
  double pin = 0, pout = 0, sin_ = 0, sout = 0;
  int counted = 0;
  for (const json& rep : reports) {
    if (!rep.contains("psnr_in") || rep["psnr_in"].is_null()) continue;
    if (!rep["psnr_in"].is_number() || !rep["psnr_out"].is_number()) continue;
    pin += rep["psnr_in"].get<double>();
    pout += rep["psnr_out"].get<double>();
    sin_ += rep["ssim_in"].get<double>();
    sout += rep["ssim_out"].get<double>();
    ++counted;
  }
  if (counted > 0) {
    agg["mean_psnr_in"] = pin / counted;
    agg["mean_psnr_out"] = pout / counted;
    agg["mean_ssim_in"] = sin_ / counted;
    agg["mean_ssim_out"] = sout / counted;
  }
  write_json(agg, m.output_dir + "/report.json");
  if (m.json_stdout) std::printf("%s\n", agg.dump(2).c_str());
  return 0;
}

int cmd_eval(const RunManifest& m, const AppConfig& cfg) {
  if (m.inputs.size() != 1 || !fs::is_directory(m.inputs[0]))
    throw UsageError("eval expects one results directory");
  if (m.gt_path.empty() || !fs::is_directory(m.gt_path))
    throw UsageError("eval requires --gt <directory>");
  ensure_dir(m.output_dir);

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(m.inputs[0])) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".png") continue;
    if (name.size() > 7 && name.compare(name.size() - 7, 7, "_gt.png") == 0) continue;
    files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());

  // when the directory holds solver triplets, score only the D outputs
  const bool has_d = std::any_of(files.begin(), files.end(), [](const std::string& f) {
    const std::string s = stem_of(f);
    return s.size() > 2 && s.compare(s.size() - 2, 2, "_D") == 0;
  });
  if (has_d) {
    std::vector<std::string> keep;
    for (const std::string& f : files) {
      const std::string s = stem_of(f);
      if (s.size() > 2 && s.compare(s.size() - 2, 2, "_D") == 0) keep.push_back(f);
    }
    files.swap(keep);
  }

  json pairs = json::array();
  std::vector<std::string> skipped;
  double psum = 0, ssum = 0;
  int counted = 0;
  for (const std::string& f : files) {
    const std::string gt_file = resolve_gt(m.gt_path, f, 2);
    if (gt_file.empty()) {
      skipped.push_back(f);
      logmsg(kWarn, "no ground truth for " + f + ", skipped");
      continue;
    }
    const ImageBuffer a = load_image(f, cfg.gamma_decode);
    const ImageBuffer g = load_image(gt_file, cfg.gamma_decode);
    const double p = psnr(a, g), s = ssim(a, g);
    pairs.push_back(json{{"result", f},
                         {"gt", gt_file},
                         {"psnr", metric_to_json(p)},
                         {"ssim", s}});
    psum += p;
    ssum += s;
    ++counted;
  }

  json out{{"command", "eval"},
           {"pairs", pairs},
           {"skipped", skipped},
           {"warnings", skipped.size()}};
  if (counted > 0) {
    out["mean_psnr"] = metric_to_json(psum / counted);
    out["mean_ssim"] = ssum / counted;
  }
  write_json(out, m.output_dir + "/eval.json");

  if (m.json_stdout) {
    std::printf("%s\n", out.dump(2).c_str());
  } else {
    std::printf("%-40s %12s %8s\n", "result", "psnr", "ssim");
    for (const json& p : pairs) {
      const std::string name = stem_of(p["result"].get<std::string>());
      const json& pv = p["psnr"];
      if (pv.is_string())
        std::printf("%-40s %12s %8.4f\n", name.c_str(), "inf", p["ssim"].get<double>());
      else
        std::printf("%-40s %12.4f %8.4f\n", name.c_str(), pv.get<double>(),
                    p["ssim"].get<double>());
    }
    if (counted > 0) {
      if (std::isinf(psum / counted))
        std::printf("%-40s %12s %8.4f\n", "mean", "inf", ssum / counted);
      else
        std::printf("%-40s %12.4f %8.4f\n", "mean", psum / counted, ssum / counted);
    }
    if (!skipped.empty())
      std::printf("skipped %zu unmatched file(s)\n", skipped.size());
  }
  return counted > 0 ? 0 : 1;
}

}  // namespace

AppConfig load_config(const std::string& path) {
  if (path.empty()) return AppConfig{};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, "config " + path + ": " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, "config " + path + ": " + e.what());
  }
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"nighttime lens flare synthesis and removal"};
  app.require_subcommand(1);

  RunManifest m;

  auto add_common = [&](CLI::App* sub, bool with_gt) {
    sub->add_option("inputs", m.inputs, "input files")->required();
    sub->add_option("--config", m.config_path, "JSON config file");
    sub->add_option("--out", m.output_dir, "output directory");
    auto* seed = sub->add_option("--seed", m.seed, "base RNG seed");
    sub->final_callback([&m, seed] { m.seed_given = seed->count() > 0; });
    sub->add_option("--jobs", m.jobs, "worker threads across images");
    sub->add_flag("--json", m.json_stdout, "machine-readable stdout");
    sub->add_flag("--force", m.force, "overwrite existing outputs");
    sub->add_flag("--debug-dumps", m.debug_dumps, "write per-stage debug images");
    if (with_gt) sub->add_option("--gt", m.gt_path, "ground-truth file or directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "render flare/ground-truth pairs");
  add_common(synth, false);
  CLI::App* masks = app.add_subcommand("masks", "dump source and ghost masks");
  add_common(masks, false);
  CLI::App* deglow = app.add_subcommand("deglow", "remove glow only (no inpainting)");
  add_common(deglow, true);
  CLI::App* deghost = app.add_subcommand("deghost", "remove ghost by inpainting only");
  add_common(deghost, true);
  CLI::App* joint = app.add_subcommand("joint", "full glow+ghost removal");
  add_common(joint, true);
  CLI::App* eval = app.add_subcommand("eval", "score results against ground truth");
  add_common(eval, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  try {
    const AppConfig cfg = load_config(m.config_path);
    if (synth->parsed()) return cmd_synth(m, cfg);
    if (masks->parsed()) return cmd_masks(m, cfg);
    if (deglow->parsed()) return cmd_removal(m, cfg, /*use_ostpm=*/false, false);
    if (deghost->parsed()) return cmd_removal(m, cfg, true, /*inpaint_only=*/true);
    if (joint->parsed()) return cmd_removal(m, cfg, true, false);
    if (eval->parsed()) return cmd_eval(m, cfg);
    return 2;
  } catch (const UsageError& e) {
    logmsg(kError, e.what());
    return 2;
  } catch (const Error& e) {
    logmsg(kError, std::string(error_kind_name(e.kind())) + ": " + e.what());
    return 1;
  } catch (const std::exception& e) {
    logmsg(kError, e.what());
    return 1;
  }
}

}  // namespace flare
