// Command-line front end: parses flags into config overrides and dispatches to
// the pipeline runners. Errors print one machine-parsable line on stderr.

#include "vsraug/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using vsraug::ErrorKind;
using vsraug::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::config:
  case ErrorKind::invalid_argument: return 2;
  case ErrorKind::io: return 3;
  case ErrorKind::format:
  case ErrorKind::unsupported_version: return 4;
  case ErrorKind::numeric: return 5;
  }
  return 1;
}

std::string escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

/// Flag values that were given on the command line, as a config patch.
struct Overrides {
  json patch = json::object();

  template <class T> void set(CLI::Option *opt, const std::vector<std::string> &path, const T &value) {
    if (!opt || opt->count() == 0) return;
    json *node = &patch;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) node = &(*node)[path[i]];
    (*node)[path.back()] = value;
  }
};

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sequential noise extraction, degradation and NegMix augmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0, video_id = 0;
  int bit_depth = 8;
  std::string input, output, bank, reference;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto *o_seed = app.add_option("--seed", seed, "master seed");
  auto *o_video = app.add_option("--video-id", video_id, "video lane tag");
  auto *o_depth = app.add_option("--bit-depth", bit_depth, "PNG output bit depth (8|16)");
  auto *o_input = app.add_option("--input,-i", input, "input manifest");
  auto *o_output = app.add_option("--output,-o", output, "output path");
  auto *o_bank = app.add_option("--bank", bank, "noise bank container");
  auto *o_ref = app.add_option("--reference", reference, "reference manifest (eval)");

  // extract-noise / calibrate
  double sigma = 0, mu = 0, sigma_var = 0, sigma_mean = 0;
  std::size_t window = 64;
  bool zero_mean = false;
  auto *extract = app.add_subcommand("extract-noise", "video -> noise bank");
  auto *calibrate = app.add_subcommand("calibrate", "report window statistics for threshold tuning");
  std::vector<CLI::Option *> o_sigma, o_mu, o_svar, o_smean, o_window, o_zero;
  for (auto *sub : {extract, calibrate}) {
    o_sigma.push_back(sub->add_option("--sigma", sigma, "per-window variance threshold"));
    o_mu.push_back(sub->add_option("--mu", mu, "per-window mean threshold"));
    o_svar.push_back(sub->add_option("--sigma-var", sigma_var, "variance-of-variances bound"));
    o_smean.push_back(sub->add_option("--sigma-mean", sigma_mean, "variance-of-means bound"));
    o_window.push_back(sub->add_option("--window", window, "square window side"));
  }
  o_zero.push_back(extract->add_flag("--zero-mean", zero_mean, "store mean-subtracted residuals"));

  // degrade
  vsraug::DegradeOptions dopt;
  int order = 2;
  auto *degrade = app.add_subcommand("degrade", "HR clip -> LR clip");
  degrade->add_option("--dump-chain", dopt.dump_chain, "write the sampled chain as JSON");
  degrade->add_option("--chain", dopt.chain_file, "replay a dumped chain")->check(CLI::ExistingFile);
  auto *o_order = degrade->add_option("--order", order, "1 or 2 repetitions of the stage template");

  // negmix / demo-grid
  vsraug::NegMixOptions nopt;
  double m = 0.5, p = 0.5;
  std::size_t patch_scale = 4, entry = 0;
  bool temporal_lock = false;
  std::vector<double> m_rows;
  auto *negmix = app.add_subcommand("negmix", "LR clip + noise bank -> negative clip");
  auto *grid = app.add_subcommand("demo-grid", "one frame -> P-sweep grid image");
  std::vector<CLI::Option *> o_m, o_p, o_ps, o_lock;
  for (auto *sub : {negmix, grid}) {
    o_m.push_back(sub->add_option("--m", m, "noise mixing weight"));
    o_p.push_back(sub->add_option("--p", p, "rotation probability (0.0..1.0 step 0.1)"));
    o_ps.push_back(sub->add_option("--patch-scale", patch_scale, "patches per side"));
    o_lock.push_back(sub->add_flag("--temporal-lock", temporal_lock, "share decisions across frames"));
  }
  negmix->add_flag("--p-grid", nopt.p_grid, "sweep P over the 11-value grid");
  negmix->add_option("--dump-decisions", nopt.dump_decisions, "write patch decisions as JSON");
  auto *o_entry = negmix->add_option("--entry", entry, "noise bank entry index");
  auto *o_rows = grid->add_option("--m-rows", m_rows, "M value per grid row")->delimiter(',');

  // train-toy
  std::size_t steps = 200;
  double lr = 0.05;
  auto *train = app.add_subcommand("train-toy", "train the linear restorer; writes a loss CSV");
  auto *o_steps = train->add_option("--steps", steps, "gradient steps");
  auto *o_lr = train->add_option("--lr", lr, "step size");

  auto *eval = app.add_subcommand("eval", "PSNR/SSIM report, or a bank report with --bank only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error code=cli.usage exit=2 message=\"" << escape(e.what()) << "\"\n";
    return 2;
  }

  try {
    Overrides ov;
    ov.set(o_seed, {"seed"}, seed);
    ov.set(o_video, {"video_id"}, video_id);
    ov.set(o_depth, {"bit_depth"}, bit_depth);
    ov.set(o_input, {"paths", "input"}, input);
    ov.set(o_output, {"paths", "output"}, output);
    ov.set(o_bank, {"paths", "noise_bank"}, bank);
    ov.set(o_ref, {"paths", "reference"}, reference);
    for (std::size_t i = 0; i < o_sigma.size(); ++i) {
      ov.set(o_sigma[i], {"noise", "sigma"}, sigma);
      ov.set(o_mu[i], {"noise", "mu"}, mu);
      ov.set(o_svar[i], {"noise", "sigma_var"}, sigma_var);
      ov.set(o_smean[i], {"noise", "sigma_mean"}, sigma_mean);
      ov.set(o_window[i], {"noise", "window"}, window);
    }
    ov.set(o_zero[0], {"noise", "zero_mean"}, zero_mean);
    ov.set(o_order, {"degrade", "order"}, order);
    for (std::size_t i = 0; i < o_m.size(); ++i) {
      ov.set(o_m[i], {"negmix", "m"}, m);
      ov.set(o_p[i], {"negmix", "p"}, p);
      ov.set(o_ps[i], {"negmix", "patch_scale"}, patch_scale);
      ov.set(o_lock[i], {"negmix", "temporal_lock"}, temporal_lock);
    }
    ov.set(o_rows, {"grid", "m_rows"}, m_rows);
    ov.set(o_steps, {"train", "steps"}, steps);
    ov.set(o_lr, {"train", "lr"}, lr);
    if (o_entry->count()) nopt.entry = entry;

    const json file = config_path.empty() ? json::object() : vsraug::read_config_file(config_path);
    const vsraug::PipelineConfig cfg = vsraug::parse_config(file, ov.patch);
    vsraug::validate_input_paths(cfg);

    json summary;
    if (extract->parsed()) summary = vsraug::run_extract_noise(cfg);
    else if (calibrate->parsed()) summary = vsraug::run_calibrate(cfg);
    else if (degrade->parsed()) summary = vsraug::run_degrade(cfg, dopt);
    else if (negmix->parsed()) summary = vsraug::run_negmix(cfg, nopt);
    else if (grid->parsed()) summary = vsraug::run_demo_grid(cfg);
    else if (train->parsed()) summary = vsraug::run_train_toy(cfg);
    else if (eval->parsed()) summary = vsraug::run_eval(cfg);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const vsraug::Error &e) {
    std::cerr << "error code=" << e.code() << " exit=" << exit_code(e.kind()) << " message=\"" << escape(e.what())
              << "\"\n";
    return exit_code(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "error code=cli.internal exit=1 message=\"" << escape(e.what()) << "\"\n";
    return 1;
  }
}
