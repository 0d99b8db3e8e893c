// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: synthesize oracle scenes, run the segmentation
// pipeline, evaluate predictions, and colorize label maps.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "agm/agm.hpp"

namespace {

using nlohmann::json;

struct MergeFlags {
  int r_c = -1;
  int merge_window = -1;
  std::vector<double> thresholds;
  double noise_std = -1.0;
  double flip_prob = -1.0;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  double softness = -1.0;
  std::string config_path;
};

// Shared knobs for subcommands that build a PipelineConfig.
void add_config_flags(CLI::App* cmd, MergeFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file; flags override it");
  auto* seed = cmd->add_option("--seed", f.seed, "base seed for derived per-ROI streams");
  seed->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--r-c", f.r_c, "minimum pixels per emitted instance");
  cmd->add_option("--merge-window", f.merge_window, "forced local merge tile size (1, 2 or 4)");
  cmd->add_option("--thresholds", f.thresholds,
                  "stage thresholds short,medium,long (e.g. 0.97,0.7,0.3)")
      ->delimiter(',')
      ->expected(0, 3);
  cmd->add_option("--noise-std", f.noise_std, "Gaussian affinity noise sigma");
  cmd->add_option("--flip-prob", f.flip_prob, "probability of replacing a value uniformly");
  cmd->add_option("--workers", f.workers, "concurrent ROI workers");
  cmd->add_option("--softness", f.softness, "oracle semantic softness in [0,0.5)");
}

void apply_json_config(agm::PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::invalid_argument("cannot open config file " + path);
  json j = json::parse(in);
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") cfg.seed = value.get<uint64_t>();
    else if (key == "workers") cfg.workers = value.get<int>();
    else if (key == "softness") cfg.softness = value.get<double>();
    else if (key == "alpha") cfg.alpha = value.get<double>();
    else if (key == "r_c") cfg.merge.r_c = value.get<int>();
    else if (key == "merge_window") cfg.merge.merge_window = value.get<int>();
    else if (key == "noise_std") cfg.noise.gaussian_std = value.get<double>();
    else if (key == "flip_prob") cfg.noise.flip_prob = value.get<double>();
    else if (key == "thresholds") {
      std::vector<double> t = value.get<std::vector<double>>();
      if (t.size() != 3)
        throw std::invalid_argument("config thresholds needs exactly 3 values");
      cfg.merge.r_ws = t[0];
      cfg.merge.r_wm = t[1];
      cfg.merge.r_wl = t[2];
    } else if (key == "remap_pair") {
      std::vector<int> p = value.get<std::vector<int>>();
      if (p.size() != 2) throw std::invalid_argument("config remap_pair needs 2 classes");
      cfg.remap_pair = {p[0], p[1]};
    } else if (key == "roi") {
      for (const auto& [rk, rv] : value.items()) {
        if (rk == "block") cfg.roi.block = rv.get<int>();
        else if (rk == "extension") cfg.roi.extension = rv.get<int>();
        else if (rk == "target") cfg.roi.target = rv.get<int>();
        else if (rk == "max_scale") cfg.roi.max_scale = rv.get<double>();
        else throw std::invalid_argument("unknown config key roi." + rk);
      }
    } else {
      throw std::invalid_argument("unknown config key " + key);
    }
  }
}

agm::PipelineConfig build_config(const MergeFlags& f) {
  agm::PipelineConfig cfg;
  if (!f.config_path.empty()) apply_json_config(cfg, f.config_path);
  if (f.seed_set) cfg.seed = f.seed;
  if (f.r_c >= 0) cfg.merge.r_c = f.r_c;
  if (f.merge_window >= 0) cfg.merge.merge_window = f.merge_window;
  if (!f.thresholds.empty()) {
    if (f.thresholds.size() != 3)
      throw std::invalid_argument("--thresholds needs exactly 3 values");
    cfg.merge.r_ws = f.thresholds[0];
    cfg.merge.r_wm = f.thresholds[1];
    cfg.merge.r_wl = f.thresholds[2];
  }
  if (f.noise_std >= 0.0) cfg.noise.gaussian_std = f.noise_std;
  if (f.flip_prob >= 0.0) cfg.noise.flip_prob = f.flip_prob;
  if (f.workers >= 0) cfg.workers = f.workers;
  if (f.softness >= 0.0) cfg.softness = f.softness;
  cfg.validate();
  return cfg;
}

std::vector<agm::EvalInstance> load_instances(const std::string& dir) {
  agm::LabelMap labels = agm::read_label_png(dir + "/labels.png");
  std::vector<agm::InstanceRecord> recs =
      agm::read_instances_json(dir + "/instances.json");
  return agm::instances_from_labels(labels, recs);
}

agm::LabelMap class_map_of(const std::string& dir, int class_count) {
  agm::LabelMap labels = agm::read_label_png(dir + "/labels.png");
  std::vector<agm::InstanceRecord> recs =
      agm::read_instances_json(dir + "/instances.json");
  int max_id = 0;
  for (const agm::InstanceRecord& r : recs) max_id = std::max(max_id, r.id);
  std::vector<int> cls(static_cast<size_t>(max_id) + 1, 0);
  for (const agm::InstanceRecord& r : recs) {
    if (r.class_id < 1 || r.class_id > class_count)
      throw std::invalid_argument("instance class out of range in " + dir);
    cls[static_cast<size_t>(r.id)] = r.class_id;
  }
  agm::LabelMap out(labels.h, labels.w);
  for (size_t i = 0; i < labels.v.size(); ++i) {
    int id = labels.v[i];
    if (id == 0) continue;
    if (id > max_id || cls[static_cast<size_t>(id)] == 0)
      throw std::invalid_argument("label map references unknown instance id " +
                                  std::to_string(id));
    out.v[i] = cls[static_cast<size_t>(id)];
  }
  return out;
}

int run_synth(const std::string& out_dir, int height, int width, int instances,
              double fragment_prob, const MergeFlags& f) {
  agm::PipelineConfig cfg = build_config(f);
  agm::Scene scene = agm::synth_scene(height, width, instances, fragment_prob, cfg.seed);
  agm::Grid semantic = agm::gt_semantic(scene, cfg.softness);
  agm::Grid affinity = agm::gt_affinity(scene);
  if (cfg.noise.gaussian_std > 0.0 || cfg.noise.flip_prob > 0.0) {
    agm::NoiseSpec noise{cfg.noise.gaussian_std, cfg.noise.flip_prob, cfg.seed};
    affinity = agm::perturb(affinity, noise);
  }
  std::filesystem::create_directories(out_dir);
  agm::write_label_png(out_dir + "/labels.png", scene.instance_map);
  agm::write_instances_json(out_dir + "/instances.json", agm::gt_records(scene));
  agm::write_tensor(out_dir + "/semantic.agmt", agm::to_tensor(semantic));
  agm::write_tensor(out_dir + "/affinity.agmt", agm::to_tensor(affinity));
  std::cout << "wrote scene with " << scene.n_instances() << " instances to "
            << out_dir << "\n";
  return 0;
}

int run_infer(const std::string& provider_name, const std::string& gt_dir,
              const std::string& semantic_path, const std::string& affinity_path,
              const std::string& out_dir, const MergeFlags& f) {
  agm::PipelineConfig cfg = build_config(f);

  agm::PipelineResult result;
  if (provider_name == "oracle") {
    agm::Scene scene =
        agm::scene_from_files(gt_dir + "/labels.png", gt_dir + "/instances.json");
    agm::Grid semantic = agm::gt_semantic(scene, cfg.softness);
    result = agm::run_pipeline(cfg, semantic, agm::make_oracle_provider(scene, cfg.softness));
  } else {
    agm::Grid semantic = agm::to_grid(agm::read_tensor(semantic_path));
    agm::Grid affinity = agm::to_grid(agm::read_tensor(affinity_path));
    result = agm::run_pipeline(cfg, semantic, agm::make_file_provider(semantic, affinity));
  }
  agm::write_pipeline_outputs(result, out_dir);
  std::cout << "wrote " << result.records.size() << " instances from "
            << result.roi_count << " rois to " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir,
             const std::string& out_path) {
  const int class_count = agm::SuperClassTable::cityscapes().class_count();
  std::vector<agm::EvalInstance> preds = load_instances(pred_dir);
  std::vector<agm::EvalInstance> gts = load_instances(gt_dir);
  agm::ApReport report = agm::ap_report(preds, gts);
  std::vector<int64_t> confusion = agm::confusion_matrix(
      class_map_of(pred_dir, class_count), class_map_of(gt_dir, class_count),
      class_count);

  json j;
  j["ap"] = report.ap;
  j["ap50"] = report.ap50;
  j["thresholds"] = report.thresholds;
  json per_class = json::object();
  for (auto [cls, ap] : report.per_class_ap) per_class[std::to_string(cls)] = ap;
  j["per_class_ap"] = per_class;
  json rows = json::array();
  const int n = class_count + 1;
  for (int g = 0; g < n; ++g) {
    json row = json::array();
    for (int p = 0; p < n; ++p) row.push_back(confusion[static_cast<size_t>(g) * n + p]);
    rows.push_back(row);
  }
  j["confusion"] = rows;

  std::string text = j.dump(2);
  std::cout << text << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out.good()) throw std::runtime_error("cannot write " + out_path);
    out << text << "\n";
  }
  return 0;
}

int run_viz(const std::string& labels_path, const std::string& out_path) {
  agm::LabelMap labels = agm::read_label_png(labels_path);
  std::vector<uint8_t> rgb(static_cast<size_t>(labels.h) * labels.w * 3, 0);
  for (size_t i = 0; i < labels.v.size(); ++i) {
    int id = labels.v[i];
    if (id == 0) continue;
    // Golden-ratio hue walk gives well-separated, id-stable colors.
    double hue = std::fmod(static_cast<double>(id) * 0.61803398874989485, 1.0) * 6.0;
    double c = 0.95 * 0.75, m = 0.95 - c;
    double xh = c * (1.0 - std::fabs(std::fmod(hue, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hue)) {
      case 0: r = c; g = xh; break;
      case 1: r = xh; g = c; break;
      case 2: g = c; b = xh; break;
      case 3: g = xh; b = c; break;
      case 4: r = xh; b = c; break;
      default: r = c; b = xh; break;
    }
    rgb[i * 3 + 0] = static_cast<uint8_t>((r + m) * 255.0 + 0.5);
    rgb[i * 3 + 1] = static_cast<uint8_t>((g + m) * 255.0 + 0.5);
    rgb[i * 3 + 2] = static_cast<uint8_t>((b + m) * 255.0 + 0.5);
  }
  agm::write_rgb_png(out_path, labels.h, labels.w, rgb);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"affinity-graph instance segmentation toolkit"};
  app.require_subcommand(1);

  MergeFlags synth_flags, infer_flags;
  std::string synth_out;
  int height = 512, width = 512, instances = 5;
  double fragment_prob = 0.3;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic labeled scene");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--height", height, "scene height");
  synth->add_option("--width", width, "scene width");
  synth->add_option("--instances", instances, "number of instances");
  synth->add_option("--fragment-prob", fragment_prob, "probability of splitting an instance");
  add_config_flags(synth, synth_flags);

  std::string infer_provider = "files", infer_gt, infer_semantic, infer_affinity, infer_out;
  CLI::App* infer = app.add_subcommand("infer", "run the segmentation pipeline");
  infer->add_option("--provider", infer_provider, "input provider")
      ->check(CLI::IsMember({"oracle", "files"}));
  infer->add_option("--gt", infer_gt, "scene directory (oracle provider)");
  infer->add_option("--semantic", infer_semantic, "semantic tensor (files provider)");
  infer->add_option("--affinity", infer_affinity, "affinity tensor (files provider)");
  infer->add_option("--out", infer_out, "output directory")->required();
  add_config_flags(infer, infer_flags);

  std::string eval_pred, eval_gt, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--pred", eval_pred, "prediction directory")->required();
  eval->add_option("--gt", eval_gt, "ground-truth directory")->required();
  eval->add_option("--out", eval_out, "also write the report here");

  std::string viz_labels, viz_out;
  CLI::App* viz = app.add_subcommand("viz", "colorize a label map");
  viz->add_option("--labels", viz_labels, "label PNG")->required();
  viz->add_option("--out", viz_out, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed())
      return run_synth(synth_out, height, width, instances, fragment_prob, synth_flags);
    if (infer->parsed()) {
      if (infer_provider == "oracle" && infer_gt.empty()) {
        std::cerr << "infer --provider oracle needs --gt\n";
        return 1;
      }
      if (infer_provider == "files" && (infer_semantic.empty() || infer_affinity.empty())) {
        std::cerr << "infer --provider files needs --semantic and --affinity\n";
        return 1;
      }
      return run_infer(infer_provider, infer_gt, infer_semantic, infer_affinity,
                       infer_out, infer_flags);
    }
    if (eval->parsed()) return run_eval(eval_pred, eval_gt, eval_out);
    if (viz->parsed()) return run_viz(viz_labels, viz_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
