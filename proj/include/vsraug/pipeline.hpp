#pragma once

// Subcommand implementations behind the command-line tool. Each runner takes
// a validated config, writes its artifacts plus an effective-config sidecar,
// and returns a JSON summary. Outputs contain no timestamps or host data.

#include "vsraug/config.hpp"
#include "vsraug/degrade.hpp"
#include "vsraug/io.hpp"
#include "vsraug/metrics.hpp"
#include "vsraug/negmix.hpp"
#include "vsraug/noise_extract.hpp"
#include "vsraug/restorer.hpp"
#include "vsraug/synthetic.hpp"

#include <cstdio>
#include <optional>

namespace vsraug {

struct DegradeOptions {
  std::string dump_chain; // write the sampled chain here
  std::string chain_file; // replay this chain instead of sampling
};

struct NegMixOptions {
  bool p_grid = false;     // sweep P over 0.0..1.0
  std::string dump_decisions;
  std::optional<std::size_t> entry; // bank entry; drawn from the seed when absent
};

namespace detail {

inline void require_path(const std::string &value, const char *field) {
  if (value.empty()) fail(ErrorKind::config, "cli", std::string(field) + ": required for this subcommand");
}

inline fs::path config_sidecar(const fs::path &artifact) { return fs::path(artifact.string() + ".config.json"); }

inline void ensure_parent(const fs::path &p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
}

inline std::string format_p(double p) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "p%.1f", p);
  return buf;
}

inline std::size_t pick_entry(const NoiseBank &bank, std::uint64_t seed, std::uint64_t video,
                              std::optional<std::size_t> requested) {
  if (bank.empty()) fail(ErrorKind::invalid_argument, "negmix", "noise bank is empty");
  if (requested) {
    if (*requested >= bank.size()) fail(ErrorKind::invalid_argument, "negmix", "bank entry index out of range");
    return *requested;
  }
  RngStream s = derive_stream(seed, "negmix.entry", video);
  return s.next_choice(bank.size());
}

} // namespace detail

inline json run_extract_noise(const PipelineConfig &cfg) {
  detail::require_path(cfg.paths.input, "paths.input");
  detail::require_path(cfg.paths.output, "paths.output");
  const VideoSequence video = load_sequence(fs::path(cfg.paths.input));
  ExtractOptions opt{cfg.noise.stride, cfg.noise.zero_mean, cfg.video_id};
  const NoiseBank bank = extract_noise_bank(video, cfg.noise.window, cfg.noise.thresholds, opt);
  const fs::path out(cfg.paths.output);
  detail::ensure_parent(out);
  const std::size_t bytes = write_noise_bank(bank, out, to_json(cfg));
  return {{"subcommand", "extract-noise"},
          {"entries", bank.size()},
          {"windows", window_origins(video.height(), video.width(), cfg.noise.window, cfg.noise.stride).size()},
          {"bytes", bytes},
          {"output", cfg.paths.output}};
}

/// Per-window statistics for threshold calibration.
inline json run_calibrate(const PipelineConfig &cfg) {
  detail::require_path(cfg.paths.input, "paths.input");
  const VideoSequence video = load_sequence(fs::path(cfg.paths.input));
  json windows = json::array();
  std::vector<double> all_var, all_mean, vov, vom;
  std::size_t accepted = 0;
  for (const WindowSequence &ws : tile_windows(video, cfg.noise.window, cfg.noise.stride)) {
    const SequenceStats s = sequence_stats(ws);
    const bool ok = accept_sequence(s, cfg.noise.thresholds);
    accepted += ok ? 1 : 0;
    all_var.insert(all_var.end(), s.variances.begin(), s.variances.end());
    all_mean.insert(all_mean.end(), s.means.begin(), s.means.end());
    vov.push_back(s.var_of_variances);
    vom.push_back(s.var_of_means);
    windows.push_back({{"x", ws.x},
                       {"y", ws.y},
                       {"max_variance", *std::max_element(s.variances.begin(), s.variances.end())},
                       {"min_mean", *std::min_element(s.means.begin(), s.means.end())},
                       {"var_of_variances", s.var_of_variances},
                       {"var_of_means", s.var_of_means},
                       {"accepted", ok}});
  }
  const double var_hi = all_var.empty() ? 1.0 : std::max(*std::max_element(all_var.begin(), all_var.end()), 1e-12);
  json out = {{"subcommand", "calibrate"},
              {"windows", windows},
              {"accepted", accepted},
              {"variance_histogram", {{"lo", 0.0}, {"hi", var_hi}, {"counts", histogram(all_var, 0.0, var_hi, kHistogramBins)}}},
              {"mean_histogram", {{"lo", 0.0}, {"hi", 1.0}, {"counts", histogram(all_mean, 0.0, 1.0, kHistogramBins)}}},
              {"thresholds",
               {{"sigma", cfg.noise.thresholds.sigma},
                {"mu", cfg.noise.thresholds.mu},
                {"sigma_var", cfg.noise.thresholds.sigma_var},
                {"sigma_mean", cfg.noise.thresholds.sigma_mean}}}};
  if (!cfg.paths.output.empty()) {
    detail::ensure_parent(cfg.paths.output);
    write_json_file(out, cfg.paths.output, "cli");
  }
  return out;
}

inline json run_degrade(const PipelineConfig &cfg, const DegradeOptions &opt = {}) {
  detail::require_path(cfg.paths.input, "paths.input");
  detail::require_path(cfg.paths.output, "paths.output");
  const VideoSequence hr = load_sequence(fs::path(cfg.paths.input));
  DegradationChain chain;
  if (!opt.chain_file.empty()) {
    chain = chain_from_json(read_json_file(opt.chain_file, "degrade"));
  } else {
    RngStream cs = derive_stream(cfg.seed, "degrade.chain", cfg.video_id);
    chain = sample_chain(cfg.degrade.tmpl, cfg.degrade.order, cs);
  }
  RngStream as = derive_stream(cfg.seed, "degrade.apply", cfg.video_id);
  const VideoSequence lr = apply_chain(hr, chain, as);
  const fs::path dir(cfg.paths.output);
  json chain_json = to_json(chain);
  json effective = to_json(cfg);
  save_sequence(lr, dir, cfg.bit_depth, effective);
  write_json_file(chain_json, dir / "chain.json", "cli");
  if (!opt.dump_chain.empty()) {
    detail::ensure_parent(opt.dump_chain);
    write_json_file(chain_json, opt.dump_chain, "cli");
  }
  return {{"subcommand", "degrade"},
          {"frames", lr.size()},
          {"height", lr.height()},
          {"width", lr.width()},
          {"chain", chain_json},
          {"output", cfg.paths.output}};
}

inline json run_negmix(const PipelineConfig &cfg, const NegMixOptions &opt = {}) {
  detail::require_path(cfg.paths.input, "paths.input");
  detail::require_path(cfg.paths.noise_bank, "paths.noise_bank");
  detail::require_path(cfg.paths.output, "paths.output");
  const VideoSequence lr = load_sequence(fs::path(cfg.paths.input));
  const NoiseBank bank = read_noise_bank(cfg.paths.noise_bank);
  const std::size_t entry = detail::pick_entry(bank, cfg.seed, cfg.video_id, opt.entry);
  const VideoSequence nsq = bank.sequence(entry);
  const fs::path dir(cfg.paths.output);
  const json effective = to_json(cfg);

  std::vector<double> ps;
  if (opt.p_grid)
    for (std::size_t i = 0; i < kProbabilityGridSize; ++i) ps.push_back(grid_probability(i));
  else
    ps.push_back(cfg.negmix.p);

  json runs = json::array();
  json dumps = json::array();
  for (double p : ps) {
    NegMixConfig nc = cfg.negmix;
    nc.p = p;
    RngStream stream = derive_stream(cfg.seed, "negmix", cfg.video_id);
    const NegResult r = negmix(lr, nsq, nc, stream);
    const fs::path sub = opt.p_grid ? dir / detail::format_p(p) : dir;
    save_sequence(r.video, sub, cfg.bit_depth, effective);
    const json d = decisions_to_json(r.decisions, nc);
    write_json_file(d, sub / "decisions.json", "cli");
    dumps.push_back(d);
    std::size_t rotated = 0;
    for (const PatchDecision &pd : r.decisions) rotated += pd.rotate ? 1 : 0;
    runs.push_back({{"p", p}, {"patches", r.decisions.size()}, {"rotated", rotated}, {"output", sub.string()}});
  }
  if (!opt.dump_decisions.empty()) {
    detail::ensure_parent(opt.dump_decisions);
    write_json_file(opt.p_grid ? json(dumps) : dumps.front(), opt.dump_decisions, "cli");
  }
  return {{"subcommand", "negmix"}, {"entry", entry}, {"runs", runs}};
}

struct GridImage {
  Frame image;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t tile_h = 0;
  std::size_t tile_w = 0;
};

inline constexpr std::size_t kGridSeparator = 2;

/// Rows: M values; columns: P = 0.0 .. 1.0. Tiles are separated by 2-pixel
/// white lines. Every tile reuses one decision set drawn from `seed`.
inline GridImage build_demo_grid(const Frame &frame, const Frame &noise, std::span<const double> m_rows,
                                 const NegMixConfig &base, std::uint64_t seed) {
  if (!frame.same_shape(noise)) fail(ErrorKind::invalid_argument, "negmix", "noise frame shape differs from the input frame");
  GridImage g;
  g.rows = m_rows.size();
  g.cols = kProbabilityGridSize;
  g.tile_h = frame.height();
  g.tile_w = frame.width();
  const std::size_t H = g.rows * g.tile_h + (g.rows - 1) * kGridSeparator;
  const std::size_t W = g.cols * g.tile_w + (g.cols - 1) * kGridSeparator;
  g.image = Frame(frame.channels(), H, W, 1.0);
  const VideoSequence v({frame}), n({noise});
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t col = 0; col < g.cols; ++col) {
      NegMixConfig nc = base;
      nc.m = m_rows[r];
      nc.p = grid_probability(col);
      RngStream stream = derive_stream(seed, "demo-grid", base.video_id);
      const VideoSequence out = negmix(v, n, nc, stream).video;
      const std::size_t oy = r * (g.tile_h + kGridSeparator), ox = col * (g.tile_w + kGridSeparator);
      for (std::size_t c = 0; c < frame.channels(); ++c)
        for (std::size_t y = 0; y < g.tile_h; ++y)
          for (std::size_t x = 0; x < g.tile_w; ++x) g.image(c, oy + y, ox + x) = out[0](c, y, x);
    }
  return g;
}

inline json run_demo_grid(const PipelineConfig &cfg) {
  detail::require_path(cfg.paths.input, "paths.input");
  detail::require_path(cfg.paths.output, "paths.output");
  const VideoSequence video = load_sequence(fs::path(cfg.paths.input));
  if (cfg.grid.frame >= video.size()) fail(ErrorKind::invalid_argument, "cli", "grid.frame beyond the clip length");
  const Frame &frame = video[cfg.grid.frame];
  Frame noise;
  std::string noise_source;
  if (!cfg.paths.noise_bank.empty()) {
    const NoiseBank bank = read_noise_bank(cfg.paths.noise_bank);
    const std::size_t entry = detail::pick_entry(bank, cfg.seed, cfg.video_id, std::nullopt);
    noise = bank.sequence(entry)[std::min(cfg.grid.frame, bank.n - 1)];
    noise_source = "bank entry " + std::to_string(entry);
  } else {
    noise = synthetic::flat_noise_video(1, frame.channels(), frame.height(), frame.width(),
                                        std::max(frame.height(), frame.width()), 0.05, cfg.seed)[0];
    noise_source = "synthetic flat noise";
  }
  std::vector<double> rows = cfg.grid.m_rows.empty() ? std::vector<double>{cfg.negmix.m} : cfg.grid.m_rows;
  const GridImage g = build_demo_grid(frame, noise, rows, cfg.negmix, cfg.seed);
  const fs::path out(cfg.paths.output);
  detail::ensure_parent(out);
  write_png(g.image, out, cfg.bit_depth);
  json effective = to_json(cfg);
  write_json_file({{"config", effective}, {"noise_source", noise_source}, {"rows", rows}, {"cols", g.cols},
                   {"tile_height", g.tile_h}, {"tile_width", g.tile_w}, {"separator", kGridSeparator}},
                  detail::config_sidecar(out), "cli");
  return {{"subcommand", "demo-grid"}, {"rows", g.rows}, {"cols", g.cols},
          {"height", g.image.height()}, {"width", g.image.width()}, {"output", cfg.paths.output}};
}

/// Training fixture: synthetic panning clips with sampled degradation chains,
/// and a noise bank harvested from synthetic flat footage at the LR size
/// (unless paths.noise_bank names one).
struct ToyDataset {
  std::vector<ToyClip> clips;
  NoiseBank bank;
};

inline ToyDataset make_toy_dataset(const PipelineConfig &cfg) {
  const auto &t = cfg.train;
  ToyDataset d;
  const std::size_t lr = t.hr_size / kRestorerUpscale;
  ChainTemplate tmpl = cfg.degrade.tmpl;
  tmpl.final_scale = 1.0 / static_cast<double>(kRestorerUpscale);
  for (std::size_t b = 0; b < t.clips; ++b) {
    ToyClip clip;
    clip.v_hr = synthetic::panning_clip(t.frames, t.channels, t.hr_size, t.hr_size, derive_seed(cfg.seed, {"train.clip", b, 0, 0}));
    RngStream cs = derive_stream(cfg.seed, "train.chain", b);
    clip.chain = sample_chain(tmpl, cfg.degrade.order, cs);
    d.clips.push_back(std::move(clip));
  }
  if (!cfg.paths.noise_bank.empty()) {
    d.bank = read_noise_bank(cfg.paths.noise_bank);
  } else {
    const VideoSequence footage =
        synthetic::flat_noise_video(t.frames, t.channels, 4 * lr, 4 * lr, lr, 0.03, derive_seed(cfg.seed, {"train.footage", 0, 0, 0}));
    d.bank = extract_noise_bank(footage, {lr, lr}, cfg.noise.thresholds);
  }
  return d;
}

inline TrainConfig toy_train_config(const PipelineConfig &cfg) {
  TrainConfig tc;
  tc.steps = cfg.train.steps;
  tc.lr = cfg.train.lr;
  tc.seed = cfg.seed;
  tc.negmix = cfg.negmix;
  tc.random_p = cfg.train.random_p;
  tc.weights = cfg.loss;
  tc.weights.norm_mode = cfg.train.norm_mode;
  return tc;
}

inline std::string loss_trace_csv(const TrainTrace &trace) {
  std::string out = "step,total,pix,per,aug_n\n";
  char buf[160];
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const LossReport &r = trace.steps[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, r.total, r.pix, r.per, r.aug_n);
    out += buf;
  }
  return out;
}

inline json run_train_toy(const PipelineConfig &cfg) {
  detail::require_path(cfg.paths.output, "paths.output");
  const ToyDataset data = make_toy_dataset(cfg);
  const TrainTrace trace = train_toy(ToyRestorer(cfg.train.channels), data.clips, data.bank, toy_train_config(cfg));
  const fs::path out(cfg.paths.output);
  detail::ensure_parent(out);
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cli", "cannot write " + out.string());
    f << loss_trace_csv(trace);
  }
  write_json_file({{"config", to_json(cfg)},
                   {"bank_entries", data.bank.size()},
                   {"params", std::vector<double>(trace.model.params().begin(), trace.model.params().end())}},
                  detail::config_sidecar(out), "cli");
  return {{"subcommand", "train-toy"},
          {"steps", trace.steps.size()},
          {"initial_total", trace.steps.front().total},
          {"final_total", trace.steps.back().total},
          {"output", cfg.paths.output}};
}

/// Metric report for input vs reference, or a bank report when only a bank is given.
inline json run_eval(const PipelineConfig &cfg) {
  json out;
  if (!cfg.paths.input.empty()) {
    detail::require_path(cfg.paths.reference, "paths.reference");
    const VideoSequence a = load_sequence(fs::path(cfg.paths.input));
    const VideoSequence b = load_sequence(fs::path(cfg.paths.reference));
    out = to_json(evaluate(a, b, cfg.noise.window));
  } else if (!cfg.paths.noise_bank.empty()) {
    out = bank_report(read_noise_bank(cfg.paths.noise_bank));
  } else {
    fail(ErrorKind::config, "cli", "paths.input: eval needs an input sequence or a noise bank");
  }
  if (!cfg.paths.output.empty()) {
    detail::ensure_parent(cfg.paths.output);
    write_json_file(out, cfg.paths.output, "cli");
  }
  return out;
}

} // namespace vsraug
