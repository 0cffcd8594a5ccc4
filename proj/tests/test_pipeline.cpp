#include "helpers.hpp"
#include "vsraug/pipeline.hpp"

#include <gtest/gtest.h>

using namespace vsraug;
using testing_util::TempDir;

namespace {

/// Writes a flat-noise source clip and a natural HR clip under `root`.
void write_inputs(const fs::path &root, std::size_t frames = 3) {
  save_sequence(synthetic::flat_noise_video(frames, 3, 256, 256, 64, 0.02, 1), root / "footage");
  save_sequence(synthetic::panning_clip(frames, 3, 256, 256, 2), root / "hr");
}

PipelineConfig base_config(const fs::path &root) {
  PipelineConfig cfg = parse_config({{"seed", 5}});
  cfg.paths.input = (root / "footage" / "manifest.json").string();
  cfg.paths.output = (root / "bank.nsqb").string();
  return cfg;
}

} // namespace

TEST(Pipeline, ExtractWritesBankAndSidecar) {
  TempDir dir("pipe");
  write_inputs(dir.path());
  const PipelineConfig cfg = base_config(dir.path());
  const json s = run_extract_noise(cfg);
  EXPECT_EQ(s["windows"], 16);
  EXPECT_EQ(s["entries"], 16);
  const NoiseBank bank = read_noise_bank(dir / "bank.nsqb");
  EXPECT_EQ(bank.size(), 16u);
  EXPECT_EQ(bank.h, 64u);
  const json meta = read_json_file(bank_sidecar_path(dir / "bank.nsqb"));
  EXPECT_EQ(meta["config"]["seed"], 5);
  EXPECT_EQ(meta["variance_convention"], "population");
}

TEST(Pipeline, CalibrateReportsEveryWindow) {
  TempDir dir("pipe");
  save_sequence(synthetic::half_flat_video(2, 1, 128, 128, 0.02, 3), dir / "half");
  PipelineConfig cfg = parse_config({{"noise", {{"mu", 0.1}}}});
  cfg.paths.input = (dir / "half" / "manifest.json").string();
  cfg.paths.output = (dir / "cal.json").string();
  const json s = run_calibrate(cfg);
  EXPECT_EQ(s["windows"].size(), 4u);
  EXPECT_EQ(s["accepted"], 2);
  EXPECT_TRUE(fs::exists(dir / "cal.json"));
}

TEST(Pipeline, DegradeReplaysDumpedChain) {
  TempDir dir("pipe");
  write_inputs(dir.path(), 2);
  PipelineConfig cfg = base_config(dir.path());
  cfg.paths.input = (dir / "hr" / "manifest.json").string();
  cfg.paths.output = (dir / "lr").string();
  DegradeOptions opt;
  opt.dump_chain = (dir / "chain.json").string();
  const json s = run_degrade(cfg, opt);
  EXPECT_EQ(s["height"], 64);
  EXPECT_EQ(s["width"], 64);
  const auto first = testing_util::snapshot(dir / "lr");
  EXPECT_TRUE(first.count("chain.json"));
  EXPECT_TRUE(first.count("f001.png"));

  cfg.seed = 999; // a different seed would sample a different chain
  cfg.paths.output = (dir / "lr2").string();
  DegradeOptions replay;
  replay.chain_file = (dir / "chain.json").string();
  run_degrade(cfg, replay);
  EXPECT_EQ(testing_util::slurp(dir / "lr2" / "chain.json"), first.at("chain.json"));
}

TEST(Pipeline, NegMixProbabilityGrid) {
  TempDir dir("pipe");
  write_inputs(dir.path(), 2);
  PipelineConfig cfg = base_config(dir.path());
  run_extract_noise(cfg);
  cfg.paths.input = (dir / "hr" / "manifest.json").string();
  cfg.paths.output = (dir / "lr").string();
  run_degrade(cfg);

  cfg.paths.input = (dir / "lr" / "manifest.json").string();
  cfg.paths.noise_bank = (dir / "bank.nsqb").string();
  cfg.paths.output = (dir / "neg").string();
  NegMixOptions opt;
  opt.p_grid = true;
  const json s = run_negmix(cfg, opt);
  ASSERT_EQ(s["runs"].size(), 11u);
  EXPECT_EQ(s["runs"][0]["rotated"], 0);
  EXPECT_EQ(s["runs"][10]["rotated"], 2 * 16);
  for (const char *p : {"p0.0", "p0.5", "p1.0"}) EXPECT_TRUE(fs::exists(dir / "neg" / p / "decisions.json")) << p;

  // P = 0 output is the mixed clip, quantized
  const NoiseBank bank = read_noise_bank(dir / "bank.nsqb");
  const VideoSequence lr = load_sequence(dir / "lr" / "manifest.json");
  const VideoSequence mixed = mix_noise(lr, bank.sequence(s["entry"].get<std::size_t>()), cfg.negmix.m);
  TempDir q("pipe");
  save_sequence(mixed, q.path());
  EXPECT_EQ(load_sequence(dir / "neg" / "p0.0" / "manifest.json"), load_sequence(q / "manifest.json"));
}

TEST(Pipeline, NegMixRejectsMismatchedBank) {
  TempDir dir("pipe");
  write_inputs(dir.path(), 2);
  PipelineConfig cfg = base_config(dir.path());
  run_extract_noise(cfg);
  cfg.paths.input = (dir / "hr" / "manifest.json").string(); // 256x256, bank is 64x64
  cfg.paths.noise_bank = (dir / "bank.nsqb").string();
  cfg.paths.output = (dir / "neg").string();
  EXPECT_THROW(run_negmix(cfg), Error);
  NegMixOptions opt;
  opt.entry = 99;
  EXPECT_THROW(run_negmix(cfg, opt), Error);
}

TEST(Pipeline, DemoGridLayout) {
  TempDir dir("pipe");
  save_sequence(synthetic::panning_clip(1, 3, 32, 32, 4), dir / "clip");
  PipelineConfig cfg = parse_config({{"grid", {{"m_rows", {0.25, 0.5}}}}});
  cfg.paths.input = (dir / "clip" / "manifest.json").string();
  cfg.paths.output = (dir / "grid.png").string();
  const json s = run_demo_grid(cfg);
  EXPECT_EQ(s["cols"], 11);
  EXPECT_EQ(s["rows"], 2);
  const Frame img = read_png(dir / "grid.png");
  EXPECT_EQ(img.width(), 11u * 32u + 10u * kGridSeparator);
  EXPECT_EQ(img.height(), 2u * 32u + kGridSeparator);
  EXPECT_TRUE(fs::exists(dir / "grid.png.config.json"));
}

TEST(Pipeline, TrainToyWritesCsv) {
  TempDir dir("pipe");
  PipelineConfig cfg = parse_config({{"train", {{"steps", 5}, {"clips", 2}, {"frames", 2}, {"hr_size", 32}}}});
  cfg.paths.output = (dir / "loss.csv").string();
  run_train_toy(cfg);
  const std::string csv = testing_util::slurp(dir / "loss.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,total,pix,per,aug_n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  const json side = read_json_file(dir / "loss.csv.config.json");
  EXPECT_EQ(side["params"].size(), 30u);
}

TEST(Pipeline, EvalModes) {
  TempDir dir("pipe");
  save_sequence(synthetic::panning_clip(2, 1, 64, 64, 4), dir / "a");
  PipelineConfig cfg;
  cfg.paths.input = (dir / "a" / "manifest.json").string();
  cfg.paths.reference = cfg.paths.input;
  const json m = run_eval(cfg);
  EXPECT_EQ(m["psnr"], 99.0);
  cfg = PipelineConfig{};
  EXPECT_THROW(run_eval(cfg), Error);
}

TEST(Pipeline, MissingPathsAreConfigErrors) {
  try {
    run_extract_noise(PipelineConfig{});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Pipeline, RerunIsByteIdentical) {
  TempDir dir("pipe");
  write_inputs(dir.path(), 2);
  auto run = [&] {
    fs::remove_all(dir / "out");
    PipelineConfig cfg = base_config(dir.path());
    cfg.paths.output = (dir / "out" / "bank.nsqb").string();
    run_extract_noise(cfg);
    cfg.paths.input = (dir / "hr" / "manifest.json").string();
    cfg.paths.output = (dir / "out" / "lr").string();
    run_degrade(cfg);
    cfg.paths.input = (dir / "out" / "lr" / "manifest.json").string();
    cfg.paths.noise_bank = (dir / "out" / "bank.nsqb").string();
    cfg.paths.output = (dir / "out" / "neg").string();
    run_negmix(cfg);
    return testing_util::snapshot(dir / "out");
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a.size(), b.size());
  EXPECT_TRUE(a == b);
}
