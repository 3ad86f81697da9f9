// Command line driver: dataset generation, training, rendering, evaluation,
// and gradient verification for the reflection-aware voxel radiance field.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rfl/checkpoint.hpp"
#include "rfl/config.hpp"
#include "rfl/errors.hpp"
#include "rfl/evaluate.hpp"
#include "rfl/optim.hpp"
#include "rfl/scenes.hpp"
#include "rfl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string seed;
  std::string threads;
  bool no_edge_loss = false;
  bool no_plane_refine = false;
  bool no_scheduling = false;
  bool no_reflection = false;
};

void add_common(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "config file (key=value lines)");
  cmd->add_option("--seed", flags->seed, "override the config seed");
  cmd->add_option("--threads", flags->threads, "worker count (0 = all cores)");
  cmd->add_flag("--no-edge-loss", flags->no_edge_loss, "disable the sparse edge term");
  cmd->add_flag("--no-plane-refine", flags->no_plane_refine, "freeze plane parameters");
  cmd->add_flag("--no-scheduling", flags->no_scheduling, "single joint training phase");
  cmd->add_flag("--no-reflection", flags->no_reflection,
                "single-ray baseline (no reflected rays)");
}

rfl::Config resolve_config(const CommonFlags& flags,
                           const std::vector<std::pair<std::string, std::string>>& overrides) {
  rfl::Config cfg;
  if (!flags.config_path.empty()) cfg = rfl::Config::from_file(flags.config_path);
  if (!flags.seed.empty()) cfg.set("seed", flags.seed);
  if (!flags.threads.empty()) cfg.set("threads", flags.threads);
  if (flags.no_edge_loss) cfg.set("edge_loss", "false");
  if (flags.no_plane_refine) cfg.set("plane_refine", "false");
  if (flags.no_scheduling) cfg.set("scheduling", "false");
  if (flags.no_reflection) cfg.set("reflection_rays", "false");
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

int cmd_generate(const rfl::Config& cfg, const std::string& out_dir) {
  rfl::Scene scene = rfl::preset_scene(cfg.scene);
  scene.near = cfg.near;
  scene.far = cfg.far;

  rfl::DatasetManifest manifest;
  manifest.split_cameras["inside-train"] = rfl::generate_split_cameras(
      scene, "inside-train", cfg.views_train, cfg.seed, cfg.width, cfg.height);
  manifest.split_cameras["inside-val"] = rfl::generate_split_cameras(
      scene, "inside-val", cfg.views_val, cfg.seed, cfg.width, cfg.height);
  manifest.split_cameras["outside"] = rfl::generate_split_cameras(
      scene, "outside", cfg.views_outside, cfg.seed, cfg.width, cfg.height);

  rfl::render_oracle_dataset(scene, manifest, cfg.supersample, out_dir, cfg.threads, cfg.png);
  rfl::save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
  std::cout << "wrote dataset for " << cfg.scene << " to " << out_dir << "\n";
  return 0;
}

int cmd_train(const rfl::Config& cfg, const std::string& data_dir, const std::string& out_dir) {
  const auto manifest = rfl::load_manifest((fs::path(data_dir) / "manifest.json").string());
  const rfl::TrainResult result = rfl::run_schedule(cfg, manifest, data_dir, out_dir);
  std::cout << "trained " << cfg.phase_a + cfg.phase_b + cfg.phase_c << " iterations; "
            << "checkpoint and train_log.csv in " << out_dir << "\n";
  (void)result;
  return 0;
}

int cmd_render(const rfl::Config& cfg, const std::string& checkpoint_path,
               const std::string& data_dir, const std::string& split, int view, bool all,
               const std::string& out_dir) {
  const rfl::Checkpoint ckpt = rfl::load_checkpoint(checkpoint_path);
  const auto manifest = rfl::load_manifest((fs::path(data_dir) / "manifest.json").string());
  const auto it = manifest.split_cameras.find(split);
  if (it == manifest.split_cameras.end())
    throw rfl::SplitMissing("dataset is missing split: " + split);
  const auto& cams = it->second;

  const int lo = all ? 0 : view;
  const int hi = all ? static_cast<int>(cams.size()) : view + 1;
  if (lo < 0 || hi > static_cast<int>(cams.size()))
    throw rfl::IoError("view index out of range for split " + split);
  for (int i = lo; i < hi; ++i)
    rfl::write_render_panels(ckpt.field, ckpt.atten, ckpt.planes, cams[i], cfg, i, out_dir);
  std::cout << "wrote render panels to " << out_dir << "\n";
  return 0;
}

int cmd_eval(const rfl::Config& cfg, const std::string& checkpoint_path,
             const std::string& data_dir, const std::string& out_path) {
  const rfl::Checkpoint ckpt = rfl::load_checkpoint(checkpoint_path);
  const auto manifest = rfl::load_manifest((fs::path(data_dir) / "manifest.json").string());
  const rfl::EvalResult result =
      rfl::evaluate_model(ckpt.field, ckpt.atten, ckpt.planes, manifest, data_dir, cfg);
  const std::string csv = result.csv();
  if (out_path.empty() || out_path == "-") {
    std::cout << csv;
  } else {
    std::ofstream f(out_path);
    if (!f) throw rfl::IoError("cannot open for writing: " + out_path);
    f << csv;
    std::cout << "wrote metrics to " << out_path << "\n";
  }
  return 0;
}

int cmd_gradcheck(uint64_t seed, int repeats) {
  bool all_pass = true;
  for (int i = 0; i < repeats; ++i) {
    const auto report = rfl::finite_difference_check(seed + i);
    const bool pass = report.pass();
    all_pass = all_pass && pass;
    std::printf("[%s] seed %llu: %s\n", pass ? "PASS" : "FAIL",
                static_cast<unsigned long long>(seed + i), report.summary().c_str());
  }
  if (!all_pass) throw rfl::NonFiniteGradient("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reflection-aware voxel radiance field renderer and trainer"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string out_dir, data_dir, checkpoint_path, split = "inside-val", eval_out;
  int view = 0;
  bool all_views = false;
  uint64_t gc_seed = 1;
  int gc_repeats = 1;

  auto* generate = app.add_subcommand("generate", "render the oracle dataset");
  add_common(generate, &flags);
  generate->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "train on a generated dataset");
  add_common(train, &flags);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  auto* render = app.add_subcommand("render", "render the six-panel set for views");
  add_common(render, &flags);
  render->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  render->add_option("--data", data_dir, "dataset directory (cameras)")->required();
  render->add_option("--split", split, "camera split (default inside-val)");
  render->add_option("--view", view, "view index");
  render->add_flag("--all", all_views, "render every view of the split");
  render->add_option("--out", out_dir, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "metrics CSV for a checkpoint");
  add_common(eval, &flags);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", eval_out, "CSV path ('-' for stdout)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--seed", gc_seed, "base seed");
  gradcheck->add_option("--repeats", gc_repeats, "number of seeds to check");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(resolve_config(flags, {}), out_dir);
    if (train->parsed()) return cmd_train(resolve_config(flags, {}), data_dir, out_dir);
    if (render->parsed())
      return cmd_render(resolve_config(flags, {}), checkpoint_path, data_dir, split, view,
                        all_views, out_dir);
    if (eval->parsed())
      return cmd_eval(resolve_config(flags, {}), checkpoint_path, data_dir, eval_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_seed, gc_repeats);
  } catch (const rfl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
