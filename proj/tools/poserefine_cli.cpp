// Copyright 2026 The poserefine Authors
// SPDX-License-Identifier: Apache-2.0
//
// poserefine: generate synthetic corpora, train the residual-orientation
// regressor, refine initial poses, and evaluate / report MPJPE.
//
// Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 numerical
// failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "poserefine/error.hpp"
#include "poserefine/eval.hpp"
#include "poserefine/orientation.hpp"
#include "poserefine/patching.hpp"
#include "poserefine/regressor.hpp"
#include "poserefine/store.hpp"
#include "poserefine/synth.hpp"
#include "poserefine/training.hpp"

namespace {

using namespace poserefine;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<ConvSpec> parse_conv(const std::string& text) {
  std::vector<ConvSpec> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConvSpec spec;
    if (std::sscanf(item.c_str(), "%d:%d:%d", &spec.out_channels, &spec.kernel, &spec.stride) != 3) {
      throw UsageError("--conv expects out:kernel:stride[,...], got '" + item + "'");
    }
    out.push_back(spec);
  }
  return out;
}

std::vector<int> parse_widths(const std::string& text) {
  std::vector<int> out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw UsageError("--fc expects comma-separated widths, got '" + item + "'");
    }
  }
  return out;
}

struct GenArgs {
  int n = 2000;
  std::uint64_t seed = 0;
  std::string out;
  GeneratorConfig cfg;
};

struct TrainArgs {
  std::string corpus, config, out_ckpt, history;
  int epochs = 20;
  int batch = 32;
  double lr = 1e-3;
  bool pretrained_lr = false;
  int patch_res = 32;
  double min_side = 28.0;
  double scale = 2.3;
  std::string modality = "fused";
  std::string pooling = "flatten";
  std::string conv = "16:3:2,32:3:2";
  std::string fc = "64";
  std::uint64_t seed = 0;
  int patience = 2;
  bool no_shuffle = false;
};

struct SplitArgs {
  std::string corpus, ckpt, split = "test", out;
};

struct InspectArgs {
  std::string sample, out_dir;
  int patch_res = 32;
  double min_side = 28.0;
  double scale = 2.3;
};

struct ReportArgs {
  std::string eval, out_dir, corpus;
  int max_overlays = 8;
};

int run_gen(const GenArgs& a) {
  const Manifest m = generate_corpus(a.n, a.seed, a.cfg, a.out);
  std::cout << "generated " << m.samples.size() << " samples in " << a.out
            << " (config " << m.config_hash << ")\n";
  return 0;
}

// Flags passed explicitly win over the --config file, which wins over
// built-in defaults.
int run_train(const TrainArgs& a, const CLI::App& cmd) {
  const Corpus corpus = load_corpus(a.corpus);
  const int limbs = corpus.topology.limb_count();
  RegressorConfig reg = default_regressor_config(limbs, a.patch_res);
  TrainingConfig tc;
  PatchConfig patch;
  if (!a.config.empty()) {
    const json j = load_json(a.config);
    if (j.contains("regressor")) {
      json r = regressor_config_to_json(reg);
      r.update(j.at("regressor"));
      reg = regressor_config_from_json(r);
    }
    if (j.contains("training")) {
      json t = training_config_to_json(tc);
      t.update(j.at("training"));
      tc = training_config_from_json(t);
    }
    if (j.contains("patch")) {
      json p = patch_config_to_json(patch);
      p.update(j.at("patch"));
      patch = patch_config_from_json(p);
    }
  }
  auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--patch-res") || a.config.empty()) patch.out_res = a.patch_res;
  if (given("--min-side") || a.config.empty()) patch.min_side = a.min_side;
  if (given("--scale") || a.config.empty()) patch.scale = a.scale;
  reg.patch_res = patch.out_res;
  if (given("--conv") || a.config.empty()) reg.conv = parse_conv(a.conv);
  if (given("--fc") || a.config.empty()) reg.fc_widths = parse_widths(a.fc);
  if (given("--pooling") || a.config.empty()) reg.pooling = pooling_from_string(a.pooling);
  if (given("--modality") || a.config.empty()) reg.modality = modality_from_string(a.modality);
  if (given("--seed") || a.config.empty()) {
    reg.seed = a.seed;
    tc.seed = a.seed;
  }
  if (given("--epochs") || a.config.empty()) tc.max_epochs = a.epochs;
  if (given("--batch") || a.config.empty()) tc.batch_size = a.batch;
  if (given("--lr") || a.config.empty()) tc.base_lr = a.lr;
  if (a.pretrained_lr) tc.base_lr = kPretrainedBaseLr;
  if (given("--patience") || a.config.empty()) tc.plateau_patience = a.patience;
  if (a.no_shuffle) tc.shuffle = false;
  check_config(reg);
  if (tc.batch_size < 1 || !(tc.base_lr > 0.0) || tc.max_epochs < 1) {
    throw UsageError("--batch and --epochs must be >= 1 and --lr > 0");
  }

  std::cerr << "loading training data...\n";
  const Dataset train_set = make_dataset(corpus, "train", patch, reg.modality);
  const Dataset val_set = make_dataset(corpus, "val", patch, reg.modality);
  std::cerr << "train " << train_set.size() << " / val " << val_set.size() << " samples\n";
  const TrainResult result = train(train_set, val_set, reg, tc, [](const EpochRecord& r) {
    std::fprintf(stderr, "epoch %3d  train %.6f  val %.6f  lr %.1e\n", r.epoch, r.train_loss,
                 r.val_loss, r.lr);
  });
  save_checkpoint(a.out_ckpt, {reg, patch, result.params});
  json hist = history_to_json(result);
  hist["training"] = training_config_to_json(tc);
  hist["regressor"] = regressor_config_to_json(reg);
  hist["patch"] = patch_config_to_json(patch);
  const std::string history_path = a.history.empty() ? a.out_ckpt + ".history.json" : a.history;
  save_json(history_path, hist);
  std::cout << "best epoch " << result.best_epoch << " val loss " << result.best_val_loss
            << " -> " << a.out_ckpt << "\n";
  return 0;
}

int run_refine(const SplitArgs& a) {
  const Corpus corpus = load_corpus(a.corpus);
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const std::vector<RefinedPose> refined = refine_split(corpus, a.split, ckpt);
  for (const RefinedPose& r : refined) save_pose(fs::path(a.out) / r.id / "refined.json", r.pose);
  std::cout << "refined " << refined.size() << " poses into " << a.out << "\n";
  return 0;
}

int run_eval(const SplitArgs& a) {
  const Corpus corpus = load_corpus(a.corpus);
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  EvalReport report = evaluate(corpus, a.split, ckpt);
  // Stored relative to the report file so reports stay location independent.
  const fs::path report_dir = fs::absolute(a.out).parent_path();
  report.corpus = fs::absolute(a.corpus).lexically_normal().lexically_relative(report_dir).generic_string();
  save_json(a.out, report_to_json(report));
  atomic_write(a.out + ".txt", format_report_table(report));
  std::cout << format_report_table(report);
  return 0;
}

fs::path find_topology(const fs::path& sample_dir) {
  for (fs::path dir = fs::absolute(sample_dir); !dir.empty(); dir = dir.parent_path()) {
    if (fs::exists(dir / "topology.json")) return dir / "topology.json";
    if (dir == dir.parent_path()) break;
  }
  return {};
}

int run_inspect(const InspectArgs& a) {
  const fs::path dir = a.sample;
  const fs::path topo_path = find_topology(dir);
  const SkeletonTopology topo = topo_path.empty() ? default_topology() : load_topology(topo_path);
  const Keypoints2D kps = load_keypoints(dir / "kp2d.json");
  const Image rgb = read_png(dir / "rgb.png");
  const Image seg = read_png(dir / "seg.png");
  PatchConfig patch;
  patch.out_res = a.patch_res;
  patch.min_side = a.min_side;
  patch.scale = a.scale;
  const PatchVolume volume = build_volume(rgb, seg, kps, topo, patch);
  const std::vector<PatchBox> boxes = limb_boxes(kps, topo, patch);
  const fs::path out = a.out_dir;
  json geometry = json::array();
  for (int k = 0; k < topo.limb_count(); ++k) {
    const Limb& limb = topo.limbs()[k];
    char name[64];
    std::snprintf(name, sizeof(name), "limb%02d", k);
    write_png(out / (std::string(name) + "_rgb.png"), volume_patch(volume, k, false));
    write_png(out / (std::string(name) + "_seg.png"), volume_patch(volume, k, true));
    geometry.push_back({{"limb", k},
                        {"parent", topo.joint_names()[limb.parent]},
                        {"child", topo.joint_names()[limb.child]},
                        {"center", {boxes[k].center.x(), boxes[k].center.y()}},
                        {"side", boxes[k].side}});
  }
  save_json(out / "boxes.json", {{"version", kSchemaVersion},
                                 {"unit", "px"},
                                 {"patch", patch_config_to_json(patch)},
                                 {"boxes", geometry}});
  std::cout << "wrote " << 2 * topo.limb_count() << " patches to " << out.string() << "\n";
  return 0;
}

int run_report(const ReportArgs& a) {
  const EvalReport report = report_from_json(load_json(a.eval));
  const fs::path out = a.out_dir;
  atomic_write(out / "table.txt", format_report_table(report));
  json summary = report_to_json(report);
  summary.erase("samples");
  save_json(out / "summary.json", summary);
  std::cout << format_report_table(report);

  if (a.max_overlays <= 0) return 0;
  if (a.corpus.empty() && report.corpus.empty()) {
    throw DataError("report: no corpus recorded; pass --corpus");
  }
  const fs::path corpus_dir =
      a.corpus.empty() ? fs::absolute(a.eval).parent_path() / report.corpus : fs::path(a.corpus);
  const Corpus corpus = load_corpus(corpus_dir);
  std::map<std::string, const ManifestEntry*> by_id;
  for (const ManifestEntry& e : corpus.manifest.samples) by_id[e.id] = &e;
  int written = 0;
  for (const SampleResult& s : report.samples) {
    if (written >= a.max_overlays) break;
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) throw DataError("report: sample " + s.id + " not in corpus");
    const SceneSample sample = load_sample(corpus, *it->second, false);
    write_png(out / ("overlay_" + s.id + ".png"),
              render_overlay(sample.gt_pose, sample.initial_pose, s.refined, corpus.topology,
                             corpus.generator.camera.focal));
    ++written;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poserefine: patch-based refinement of 3D human pose estimates"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
  gen_cmd->add_option("--n", gen.n, "number of samples")->capture_default_str()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output corpus directory")->required();
  gen_cmd->add_option("--orient-noise", gen.cfg.perturb.orient_noise_deg,
                      "initial-estimate rotation noise std (deg)")->capture_default_str();
  gen_cmd->add_option("--length-noise", gen.cfg.perturb.length_noise_frac,
                      "initial-estimate relative limb-length noise std")->capture_default_str();
  gen_cmd->add_option("--root-noise", gen.cfg.perturb.root_noise_mm,
                      "initial-estimate root translation noise std (mm)")->capture_default_str();
  gen_cmd->add_option("--prior-pull", gen.cfg.perturb.prior_pull,
                      "initial-estimate pull toward the rest pose, in [0,1]")->capture_default_str();
  gen_cmd->add_option("--rgb-noise", gen.cfg.render.rgb_noise,
                      "per-pixel RGB noise std")->capture_default_str();
  gen_cmd->add_option("--limb-thickness", gen.cfg.render.limb_thickness_px,
                      "rendered limb half-thickness (px)")->capture_default_str();
  gen_cmd->add_option("--depth-shading", gen.cfg.render.depth_shading,
                      "brightness change per 300 mm of depth")->capture_default_str();
  gen_cmd->add_option("--val-frac", gen.cfg.val_fraction, "validation fraction")->capture_default_str();
  gen_cmd->add_option("--test-frac", gen.cfg.test_fraction, "test fraction")->capture_default_str();
  gen_cmd->add_option("--scale-jitter", gen.cfg.subject_scale_jitter,
                      "subject scale jitter (limb lengths x U(1-j,1+j))")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the residual-orientation regressor");
  train_cmd->add_option("--corpus", tr.corpus, "corpus directory")->required();
  train_cmd->add_option("--config", tr.config,
                        "JSON with optional regressor/training/patch objects");
  train_cmd->add_option("--out-ckpt", tr.out_ckpt, "output checkpoint path")->required();
  train_cmd->add_option("--history", tr.history,
                        "loss history JSON (default <out-ckpt>.history.json)");
  train_cmd->add_option("--epochs", tr.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "base learning rate (desk-scale default)")->capture_default_str();
  train_cmd->add_flag("--pretrained-lr", tr.pretrained_lr, "use the pretrained-backbone base lr 1e-5");
  train_cmd->add_option("--patch-res", tr.patch_res,
                        "patch resolution (desk-scale 32; 256 for full resolution)")->capture_default_str();
  train_cmd->add_option("--min-side", tr.min_side, "minimum padded box side (px)")->capture_default_str();
  train_cmd->add_option("--scale", tr.scale, "box rescaling factor")->capture_default_str();
  train_cmd->add_option("--modality", tr.modality, "fused|rgb|seg")->capture_default_str();
  train_cmd->add_option("--pooling", tr.pooling, "global_average|flatten")->capture_default_str();
  train_cmd->add_option("--conv", tr.conv, "conv stack out:kernel:stride,...")->capture_default_str();
  train_cmd->add_option("--fc", tr.fc, "hidden FC widths, comma-separated or 'none'")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "init and shuffle seed")->capture_default_str();
  train_cmd->add_option("--patience", tr.patience, "plateau patience (epochs)")->capture_default_str();
  train_cmd->add_flag("--no-shuffle", tr.no_shuffle, "keep samples in manifest order");

  SplitArgs ref;
  auto* refine_cmd = app.add_subcommand("refine", "write refined poses for a split");
  refine_cmd->add_option("--corpus", ref.corpus, "corpus directory")->required();
  refine_cmd->add_option("--ckpt", ref.ckpt, "checkpoint")->required();
  refine_cmd->add_option("--split", ref.split, "train|val|test|all")->capture_default_str();
  refine_cmd->add_option("--out", ref.out, "output directory (<id>/refined.json)")->required();

  SplitArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate MPJPE before and after refinement");
  eval_cmd->add_option("--corpus", ev.corpus, "corpus directory")->required();
  eval_cmd->add_option("--ckpt", ev.ckpt, "checkpoint")->required();
  eval_cmd->add_option("--split", ev.split, "train|val|test|all")->capture_default_str();
  eval_cmd->add_option("--out-report", ev.out, "report JSON (a .txt table is written alongside)")->required();

  InspectArgs in;
  auto* inspect_cmd = app.add_subcommand("inspect", "dump one sample's limb patches and boxes");
  inspect_cmd->add_option("--sample", in.sample, "sample directory")->required();
  inspect_cmd->add_option("--out-dir", in.out_dir, "output directory")->required();
  inspect_cmd->add_option("--patch-res", in.patch_res, "patch resolution")->capture_default_str();
  inspect_cmd->add_option("--min-side", in.min_side, "minimum padded box side (px)")->capture_default_str();
  inspect_cmd->add_option("--scale", in.scale, "box rescaling factor")->capture_default_str();

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "render tables and overlays from an eval report");
  report_cmd->add_option("--eval", rep.eval, "eval report JSON")->required();
  report_cmd->add_option("--out-dir", rep.out_dir, "output directory")->required();
  report_cmd->add_option("--corpus", rep.corpus, "corpus directory (default: recorded in report)");
  report_cmd->add_option("--max-overlays", rep.max_overlays, "overlay PNGs to write")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(tr, *train_cmd);
    if (*refine_cmd) return run_refine(ref);
    if (*eval_cmd) return run_eval(ev);
    if (*inspect_cmd) return run_inspect(in);
    if (*report_cmd) return run_report(rep);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
