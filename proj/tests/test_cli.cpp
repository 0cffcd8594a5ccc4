#include "helpers.hpp"
#include "vsraug/io.hpp"
#include "vsraug/synthetic.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

using namespace vsraug;
using testing_util::TempDir;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun cli(const TempDir &dir, const std::string &args) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && '" + VSRAUG_CLI_PATH + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testing_util::slurp(out);
  r.err = testing_util::slurp(err);
  return r;
}

} // namespace

TEST(Cli, HelpListsSubcommands) {
  TempDir dir("cli");
  const CliRun r = cli(dir, "--help");
  EXPECT_EQ(r.code, 0);
  for (const char *sub : {"extract-noise", "calibrate", "degrade", "negmix", "demo-grid", "train-toy", "eval"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST(Cli, ExtractOnHalfFlatVideo) {
  TempDir dir("cli");
  save_sequence(synthetic::half_flat_video(3, 3, 256, 256, 0.02, 1), dir / "half");
  const CliRun r = cli(dir, "extract-noise -i half/manifest.json -o bank.nsqb --sigma 0.01 --mu 0.1");
  ASSERT_EQ(r.code, 0) << r.err;
  const json s = json::parse(r.out);
  EXPECT_EQ(s["entries"], 8);
  EXPECT_EQ(read_noise_bank(dir / "bank.nsqb").size(), 8u);
}

TEST(Cli, FlagBeatsConfigFile) {
  TempDir dir("cli");
  save_sequence(synthetic::panning_clip(1, 3, 32, 32, 1), dir / "clip");
  testing_util::spit(dir / "cfg.json", R"({"seed": 3, "paths": {"input": "clip/manifest.json", "output": "g.png"}})");
  const CliRun r = cli(dir, "--config cfg.json --seed 7 demo-grid --m 0.5");
  ASSERT_EQ(r.code, 0) << r.err;
  const json side = read_json_file(dir / "g.png.config.json");
  EXPECT_EQ(side["config"]["seed"], 7);
  EXPECT_EQ(read_png(dir / "g.png").width(), 11u * 32u + 20u);
}

TEST(Cli, ConfigErrorExitCode) {
  TempDir dir("cli");
  testing_util::spit(dir / "cfg.json", R"({"negmix": {"m": 1.5}})");
  const CliRun r = cli(dir, "--config cfg.json eval");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error code=cli.config-error exit=2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("negmix.m"), std::string::npos);
}

TEST(Cli, MalformedConfigNamesLine) {
  TempDir dir("cli");
  testing_util::spit(dir / "cfg.json", "{\n\"seed\": 1,\n,\n}");
  const CliRun r = cli(dir, "--config cfg.json eval");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, FormatErrorExitCode) {
  TempDir dir("cli");
  testing_util::spit(dir / "bad.nsqb", "XXXX0000000000000000000000000000");
  const CliRun r = cli(dir, "--bank bad.nsqb eval");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("io.format-error"), std::string::npos) << r.err;
}

TEST(Cli, UnsupportedVersionExitCode) {
  TempDir dir("cli");
  std::string bytes = encode_noise_bank(NoiseBank{1, 1, 2, 2, {}, {}, false});
  bytes[4] = 7;
  testing_util::spit(dir / "v7.nsqb", bytes);
  const CliRun r = cli(dir, "--bank v7.nsqb eval");
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("unsupported-version"), std::string::npos) << r.err;
}

TEST(Cli, IoErrorExitCode) {
  TempDir dir("cli");
  testing_util::spit(dir / "m.json", R"({"channels": 1, "height": 4, "width": 4, "frames": ["gone.png"]})");
  const CliRun r = cli(dir, "-i m.json -o out.nsqb extract-noise");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("io.io-error"), std::string::npos) << r.err;
}

TEST(Cli, InvalidArgumentExitCode) {
  TempDir dir("cli");
  save_sequence(synthetic::panning_clip(1, 1, 30, 30, 1), dir / "clip");
  const CliRun r = cli(dir, "-i clip/manifest.json -o g.png demo-grid --patch-scale 4");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("negmix.invalid-argument"), std::string::npos) << r.err;
}

TEST(Cli, NumericErrorExitCode) {
  TempDir dir("cli");
  testing_util::spit(dir / "cfg.json", R"({"train": {"clips": 1, "frames": 1, "hr_size": 16}})");
  const CliRun r = cli(dir, "--config cfg.json -o loss.csv train-toy --steps 100 --lr 1e9");
  EXPECT_EQ(r.code, 5);
  EXPECT_NE(r.err.find("toy_restorer.numeric-error"), std::string::npos) << r.err;
}

TEST(Cli, UsageError) {
  TempDir dir("cli");
  EXPECT_EQ(cli(dir, "no-such-subcommand").code, 2);
  EXPECT_EQ(cli(dir, "").code, 2);
}
