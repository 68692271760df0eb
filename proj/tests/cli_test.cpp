// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#include "poserefine/eval.hpp"
#include "poserefine/store.hpp"
#include "poserefine/synth.hpp"
#include "test_util.hpp"

namespace poserefine {
namespace {

using testing::TempDir;

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli_output.txt";
  const std::string cmd =
      std::string("\"") + POSEREFINE_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = fs::exists(log) ? read_file(log) : "";
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = std::make_unique<TempDir>();
    const RunResult r = run_cli("gen --n 20 --seed 4 --out " + q(corpus_dir()), dir_->path());
    ASSERT_EQ(r.code, 0) << r.output;
  }
  static void TearDownTestSuite() { dir_.reset(); }

  static fs::path corpus_dir() { return dir_->path() / "corpus"; }
  RunResult run(const std::string& args) { return run_cli(args, scratch_.path()); }

  static std::unique_ptr<TempDir> dir_;
  TempDir scratch_;
};

std::unique_ptr<TempDir> Cli::dir_;

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(run("").code, 1); }

TEST_F(Cli, UnknownOptionIsUsageError) {
  EXPECT_EQ(run("gen --out x --bogus 3").code, 1);
  EXPECT_EQ(run("gen").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, HelpForEverySubcommand) {
  for (const char* sub : {"gen", "train", "refine", "eval", "inspect", "report"}) {
    const RunResult r = run(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, GenIsDeterministic) {
  const fs::path again = scratch_.path() / "again";
  ASSERT_EQ(run("gen --n 20 --seed 4 --out " + q(again)).code, 0);
  EXPECT_EQ(read_file(again / "manifest.json"), read_file(corpus_dir() / "manifest.json"));
  const Manifest m = load_manifest(again);
  for (const ManifestEntry& e : m.samples) {
    EXPECT_EQ(read_file(again / e.rgb), read_file(corpus_dir() / e.rgb)) << e.id;
    EXPECT_EQ(read_file(again / e.init), read_file(corpus_dir() / e.init)) << e.id;
  }
  const fs::path other = scratch_.path() / "other";
  ASSERT_EQ(run("gen --n 20 --seed 5 --out " + q(other)).code, 0);
  EXPECT_NE(read_file(other / "manifest.json"), read_file(corpus_dir() / "manifest.json"));
}

TEST_F(Cli, MissingCorpusIsDataError) {
  const RunResult r = run("eval --corpus " + q(scratch_.path() / "nope") + " --ckpt x --out-report " +
                          q(scratch_.path() / "r.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("data error"), std::string::npos);
}

TEST_F(Cli, CorruptCheckpointIsDataError) {
  atomic_write(scratch_.path() / "bad.ckpt", "PRFKgarbage");
  EXPECT_EQ(run("refine --corpus " + q(corpus_dir()) + " --ckpt " + q(scratch_.path() / "bad.ckpt") +
                " --out " + q(scratch_.path() / "out"))
                .code,
            2);
}

TEST_F(Cli, InvalidTrainingFlagsAreUsageErrors) {
  const std::string base = "train --corpus " + q(corpus_dir()) + " --out-ckpt " +
                           q(scratch_.path() / "c.ckpt");
  EXPECT_EQ(run(base + " --lr 0").code, 1);
  EXPECT_EQ(run(base + " --conv 3x3").code, 1);
  EXPECT_EQ(run(base + " --fc wide").code, 1);
}

Checkpoint scaled_checkpoint(double value) {
  Checkpoint c;
  c.regressor = default_regressor_config(16, 8);
  c.patch.out_res = 8;
  c.params = init_params(c.regressor);
  c.params.values.setConstant(value);
  return c;
}

TEST_F(Cli, ZeroCheckpointRefineIsIdentity) {
  save_checkpoint(scratch_.path() / "zero.ckpt", scaled_checkpoint(0.0));
  const fs::path out = scratch_.path() / "refined";
  const RunResult r = run("refine --corpus " + q(corpus_dir()) + " --ckpt " +
                          q(scratch_.path() / "zero.ckpt") + " --split all --out " + q(out));
  ASSERT_EQ(r.code, 0) << r.output;
  const Manifest m = load_manifest(corpus_dir());
  for (const ManifestEntry& e : m.samples) {
    EXPECT_EQ(load_pose(out / e.id / "refined.json"), load_pose(corpus_dir() / e.init)) << e.id;
  }
}

TEST_F(Cli, ZeroCheckpointEvalReportsNoChange) {
  save_checkpoint(scratch_.path() / "zero.ckpt", scaled_checkpoint(0.0));
  const fs::path report = scratch_.path() / "eval.json";
  const RunResult r = run("eval --corpus " + q(corpus_dir()) + " --ckpt " +
                          q(scratch_.path() / "zero.ckpt") + " --out-report " + q(report));
  ASSERT_EQ(r.code, 0) << r.output;
  const EvalReport rep = report_from_json(load_json(report));
  EXPECT_EQ(rep.mpjpe_refined, rep.mpjpe_initial);
  EXPECT_TRUE(fs::exists(report.string() + ".txt"));
  EXPECT_NE(r.output.find("MPJPE"), std::string::npos);
}

TEST_F(Cli, OverflowingCheckpointIsNumericalFailure) {
  save_checkpoint(scratch_.path() / "huge.ckpt", scaled_checkpoint(1e300));
  const RunResult r = run("refine --corpus " + q(corpus_dir()) + " --ckpt " +
                          q(scratch_.path() / "huge.ckpt") + " --out " + q(scratch_.path() / "o"));
  EXPECT_EQ(r.code, 3) << r.output;
}

TEST_F(Cli, TrainEvalReportPipeline) {
  const fs::path ckpt = scratch_.path() / "m.ckpt";
  const std::string train = "train --corpus " + q(corpus_dir()) +
                            " --epochs 2 --batch 4 --patch-res 8 --conv 4:3:2 --fc 8 --seed 3 --out-ckpt ";
  RunResult r = run(train + q(ckpt));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(ckpt.string() + ".history.json"));
  const Checkpoint c = load_checkpoint(ckpt);
  EXPECT_EQ(c.regressor.patch_res, 8);
  EXPECT_EQ(c.regressor.fc_widths, std::vector<int>{8});

  // Same flags, same bytes.
  ASSERT_EQ(run(train + q(scratch_.path() / "m2.ckpt")).code, 0);
  EXPECT_EQ(read_file(ckpt), read_file(scratch_.path() / "m2.ckpt"));

  const fs::path report = scratch_.path() / "eval.json";
  r = run("eval --corpus " + q(corpus_dir()) + " --ckpt " + q(ckpt) + " --split val --out-report " +
          q(report));
  ASSERT_EQ(r.code, 0) << r.output;
  const EvalReport rep = report_from_json(load_json(report));
  EXPECT_EQ(rep.split, "val");
  EXPECT_EQ(rep.samples.size(), 2u);
  EXPECT_FALSE(fs::path(rep.corpus).is_absolute());

  const fs::path out = scratch_.path() / "report";
  r = run("report --eval " + q(report) + " --out-dir " + q(out) + " --max-overlays 1");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(out / "table.txt"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / ("overlay_" + rep.samples[0].id + ".png")));
  EXPECT_FALSE(fs::exists(out / ("overlay_" + rep.samples[1].id + ".png")));
}

TEST_F(Cli, TrainConfigFileIsOverriddenByFlags) {
  save_json(scratch_.path() / "cfg.json",
            {{"regressor", {{"fc_widths", {6}}}}, {"training", {{"max_epochs", 1}}},
             {"patch", {{"out_res", 8}}}});
  const fs::path ckpt = scratch_.path() / "c.ckpt";
  const RunResult r = run("train --corpus " + q(corpus_dir()) + " --config " +
                          q(scratch_.path() / "cfg.json") + " --fc 5 --out-ckpt " + q(ckpt));
  ASSERT_EQ(r.code, 0) << r.output;
  const Checkpoint c = load_checkpoint(ckpt);
  EXPECT_EQ(c.regressor.fc_widths, std::vector<int>{5});
  EXPECT_EQ(c.patch.out_res, 8);
}

TEST_F(Cli, InspectWritesPatchesAndBoxes) {
  const Manifest m = load_manifest(corpus_dir());
  const fs::path sample = corpus_dir() / fs::path(m.samples[0].gt).parent_path();
  const fs::path out = scratch_.path() / "inspect";
  const RunResult r = run("inspect --sample " + q(sample) + " --out-dir " + q(out) + " --patch-res 16");
  ASSERT_EQ(r.code, 0) << r.output;
  for (int k = 0; k < 16; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "limb%02d_seg.png", k);
    const Image seg = read_png(out / name);
    EXPECT_EQ(seg.width(), 16);
  }
  const nlohmann::json boxes = load_json(out / "boxes.json");
  EXPECT_EQ(boxes.at("boxes").size(), 16u);
  for (const auto& b : boxes.at("boxes")) EXPECT_GE(b.at("side").get<double>(), 64.0);
}

}  // namespace
}  // namespace poserefine
