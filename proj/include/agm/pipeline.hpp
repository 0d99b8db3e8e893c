// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end orchestration: super-class decomposition, per-ROI affinity
// processing and merging, and cross-ROI stitching into full-image results.

#ifndef AGM_PIPELINE_HPP
#define AGM_PIPELINE_HPP

#include <atomic>
#include <exception>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "agm/affinity.hpp"
#include "agm/eval.hpp"
#include "agm/grid.hpp"
#include "agm/instance.hpp"
#include "agm/merge_graph.hpp"
#include "agm/oracle.hpp"
#include "agm/png_io.hpp"
#include "agm/roi.hpp"
#include "agm/superclass.hpp"

namespace agm {

struct RoiParams {
  int block = 32;        // dilation super-pixel size
  int extension = 16;    // bbox padding in original pixels
  int target = 513;      // height below which ROIs are upscaled
  double max_scale = 4.0;

  void validate() const {
    if (block < 1) throw std::invalid_argument("roi block must be >= 1");
    if (extension < 0) throw std::invalid_argument("roi extension must be >= 0");
    if (target < 1) throw std::invalid_argument("roi target must be >= 1");
    if (max_scale < 1.0) throw std::invalid_argument("roi max_scale must be >= 1");
  }
};

struct PipelineConfig {
  MergeConfig merge;
  RoiParams roi;
  SuperClassTable superclasses = SuperClassTable::cityscapes();
  std::pair<int, int> remap_pair = {SuperClassTable::kMotorcycle,
                                    SuperClassTable::kBicycle};
  double alpha = 5.0;
  double softness = 0.0;  // oracle provider semantic softness
  NoiseSpec noise;        // per-ROI; its seed field is ignored (derived below)
  uint64_t seed = 0;
  int workers = 1;

  void validate() const {
    merge.validate();
    roi.validate();
    noise.validate();
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (softness < 0.0 || softness >= 0.5)
      throw std::invalid_argument("softness must be in [0, 0.5)");
  }
};

/// Per-ROI inputs at the ROI's scaled resolution.
struct RoiData {
  Grid semantic;
  Grid affinity;
};

/// Supplies semantic probabilities and affinities for one ROI. Must be safe
/// to call from several threads at once.
using RoiProvider = std::function<RoiData(const Roi& roi)>;

/// Serves exact maps derived from a ground-truth scene. The instance map is
/// cropped and nearest-neighbor scaled first, so the generated affinities
/// are exact at the ROI's working resolution.
inline RoiProvider make_oracle_provider(const Scene& scene, double softness = 0.0) {
  return [&scene, softness](const Roi& roi) {
    LabelMap patch = nn_resize(crop(scene.instance_map, roi.bbox), roi.scaled_h,
                               roi.scaled_w);
    RoiData data{gt_semantic(patch, scene.class_map, 8, softness), gt_affinity(patch)};
    return data;
  };
}

/// Serves bilinear crops of full-resolution model outputs.
inline RoiProvider make_file_provider(const Grid& semantic, const Grid& affinity) {
  if (semantic.height() != affinity.height() || semantic.width() != affinity.width())
    throw std::invalid_argument("semantic and affinity dimensions differ");
  return [&semantic, &affinity](const Roi& roi) {
    RoiData data{bilinear_resize(crop(semantic, roi.bbox), roi.scaled_h, roi.scaled_w),
                 bilinear_resize(crop(affinity, roi.bbox), roi.scaled_h, roi.scaled_w)};
    return data;
  };
}

struct PipelineResult {
  LabelMap labels;  // 0 background, instance ids from 1 in confidence order
  std::vector<InstanceRecord> records;
  std::vector<Instance> instances;  // pixel sets matching `records` by index
  int roi_count = 0;
};

namespace pipeline_detail {

struct RoiJob {
  Roi roi;
  int component_id = 0;
  int superclass_id = 0;
  const Mask* foreground = nullptr;         // full resolution, this super-class
  const LabelMap* components = nullptr;     // full resolution, dilated labels
};

[[noreturn]] inline void fail(const std::string& stage, const std::exception& e) {
  throw std::runtime_error(stage + ": " + e.what());
}

// First scaled index that nearest-neighbor samples from each source index.
// Upscaling keeps the source map surjective, so every entry gets filled.
inline std::vector<int> nn_representatives(int out_size, int src_size) {
  std::vector<int> rep(static_cast<size_t>(src_size), -1);
  for (int i = 0; i < out_size; ++i) {
    int s = nn_source_index(i, out_size, src_size);
    if (rep[static_cast<size_t>(s)] < 0) rep[static_cast<size_t>(s)] = i;
  }
  return rep;
}

inline std::vector<Instance> process_roi(const PipelineConfig& config,
                                         const RoiProvider& provider, const RoiJob& job,
                                         int roi_index, int image_width) {
  const Roi& roi = job.roi;
  const Box& bbox = roi.bbox;
  const int sh = roi.scaled_h, sw = roi.scaled_w;
  const int bh = bbox.height(), bw = bbox.width();

  RoiData data;
  try {
    data = provider(roi);
  } catch (const std::exception& e) {
    fail("provider", e);
  }
  if (data.semantic.height() != sh || data.semantic.width() != sw ||
      data.affinity.height() != sh || data.affinity.width() != sw)
    throw std::runtime_error("provider: ROI data does not match scaled size");

  Grid weights;
  try {
    NoiseSpec noise{config.noise.gaussian_std, config.noise.flip_prob,
                    Rng::derive(config.seed, static_cast<uint64_t>(roi_index))};
    weights = perturb(data.affinity, noise);
  } catch (const std::exception& e) {
    fail("noise", e);
  }
  try {
    weights = refine_affinity(weights, data.semantic, config.superclasses, config.alpha);
  } catch (const std::exception& e) {
    fail("refine", e);
  }
  try {
    weights = remap_cross_class_d64(weights, data.semantic, config.superclasses,
                                    config.remap_pair, config.alpha);
  } catch (const std::exception& e) {
    fail("remap", e);
  }
  try {
    weights = symmetrize(weights);
  } catch (const std::exception& e) {
    fail("symmetrize", e);
  }

  // Scaled foreground follows the full-resolution mask through the same
  // nearest-neighbor sampling, restricted to this ROI's own component so
  // overlapping extended boxes cannot produce the same object twice.
  Mask fg(sh, sw);
  for (int y = 0; y < sh; ++y) {
    int fy = bbox.y0 + nn_source_index(y, sh, bh);
    for (int x = 0; x < sw; ++x) {
      int fx = bbox.x0 + nn_source_index(x, sw, bw);
      fg.at(y, x) = job.foreground->at(fy, fx) &&
                            job.components->at(fy, fx) == job.component_id
                        ? 1
                        : 0;
    }
  }

  std::vector<RoiInstance> found;
  try {
    MergeGraph graph = run_staged_merge(weights, fg, config.merge);
    found = extract_instances(graph, weights, data.semantic, config.merge);
  } catch (const std::exception& e) {
    fail("merge", e);
  }

  // Back to original resolution: each original pixel reads the first scaled
  // pixel that samples it.
  std::vector<int32_t> assign(static_cast<size_t>(sh) * sw, -1);
  for (size_t k = 0; k < found.size(); ++k)
    for (int32_t p : found[k].pixels) assign[static_cast<size_t>(p)] = static_cast<int32_t>(k);
  std::vector<int> rep_y = nn_representatives(sh, bh);
  std::vector<int> rep_x = nn_representatives(sw, bw);

  std::vector<Instance> out(found.size());
  for (size_t k = 0; k < found.size(); ++k) {
    out[k].class_id = found[k].class_id;
    out[k].confidence = found[k].confidence;
    out[k].roi_id = roi_index;
  }
  for (int fy = bbox.y0; fy < bbox.y1; ++fy) {
    int sy = rep_y[static_cast<size_t>(fy - bbox.y0)];
    for (int fx = bbox.x0; fx < bbox.x1; ++fx) {
      if (!job.foreground->at(fy, fx) ||
          job.components->at(fy, fx) != job.component_id)
        continue;
      int sx = rep_x[static_cast<size_t>(fx - bbox.x0)];
      int32_t k = assign[static_cast<size_t>(sy) * sw + sx];
      if (k >= 0)
        out[static_cast<size_t>(k)].pixels.push_back(
            static_cast<int64_t>(fy) * image_width + fx);
    }
  }
  std::erase_if(out, [](const Instance& i) { return i.pixels.empty(); });
  return out;
}

}  // namespace pipeline_detail

/// Runs the full post-processing chain over one image. The semantic grid is
/// the full-resolution class probability map; the provider supplies per-ROI
/// data at the ROI's working scale. Deterministic for a fixed config,
/// including under multi-threaded ROI processing.
inline PipelineResult run_pipeline(const PipelineConfig& config, const Grid& semantic,
                                   const RoiProvider& provider) {
  config.validate();
  try {
    validate_semantic(semantic);
  } catch (const std::exception& e) {
    pipeline_detail::fail("semantic", e);
  }
  const int height = semantic.height(), width = semantic.width();

  // Super-class decomposition at full resolution. Masks and component maps
  // outlive the jobs that point at them.
  const int sc_count = config.superclasses.superclass_count();
  std::vector<Mask> sc_fg;
  std::vector<ComponentLabels> sc_comps;
  std::vector<pipeline_detail::RoiJob> jobs;
  try {
    sc_fg.reserve(static_cast<size_t>(sc_count));
    sc_comps.reserve(static_cast<size_t>(sc_count));
    for (int sc = 1; sc <= sc_count; ++sc) {
      sc_fg.push_back(superclass_foreground(semantic, config.superclasses, sc));
      Mask dilated = superpixel_dilate(sc_fg.back(), config.roi.block);
      RoiExtraction ext = extract_rois(dilated, config.roi.extension);
      sc_comps.push_back(std::move(ext.components));
      for (size_t i = 0; i < ext.boxes.size(); ++i) {
        pipeline_detail::RoiJob job;
        job.roi = resize_roi(ext.boxes[i], config.roi.target, config.roi.max_scale);
        job.roi.superclass_id = sc;
        job.component_id = static_cast<int>(i) + 1;
        job.superclass_id = sc;
        jobs.push_back(job);
      }
    }
    // Pointers are taken only after every reallocation is done.
    size_t next = 0;
    for (int sc = 1; sc <= sc_count; ++sc) {
      size_t idx = static_cast<size_t>(sc - 1);
      while (next < jobs.size() && jobs[next].superclass_id == sc) {
        jobs[next].foreground = &sc_fg[idx];
        jobs[next].components = &sc_comps[idx].labels;
        ++next;
      }
    }
  } catch (const std::exception& e) {
    pipeline_detail::fail("roi extraction", e);
  }

  std::vector<std::vector<Instance>> per_roi(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  auto run_job = [&](size_t i) {
    try {
      per_roi[i] = pipeline_detail::process_roi(config, provider, jobs[i],
                                                static_cast<int>(i), width);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  int workers = std::min<int>(config.workers, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (;;) {
          size_t i = cursor.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(i);
        }
      });
    for (std::thread& t : pool) t.join();
  }
  for (size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("roi " + std::to_string(i) + " " + e.what());
    }
  }

  PipelineResult result;
  result.roi_count = static_cast<int>(jobs.size());
  try {
    std::vector<Instance> all;
    for (std::vector<Instance>& batch : per_roi)
      for (Instance& inst : batch) all.push_back(std::move(inst));
    result.instances = stitch(std::move(all));
  } catch (const std::exception& e) {
    pipeline_detail::fail("stitch", e);
  }

  result.labels = LabelMap(height, width);
  result.records.resize(result.instances.size());
  for (size_t k = result.instances.size(); k-- > 0;) {
    const Instance& inst = result.instances[k];
    InstanceRecord& rec = result.records[k];
    rec.id = static_cast<int>(k) + 1;
    rec.class_id = inst.class_id;
    rec.confidence = static_cast<float>(inst.confidence);
    rec.area = static_cast<int64_t>(inst.pixels.size());
    Box box{width, height, 0, 0};
    for (int64_t p : inst.pixels) {
      int y = static_cast<int>(p / width), x = static_cast<int>(p % width);
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
      result.labels.at(y, x) = rec.id;  // descending k: low ids win overlaps
    }
    rec.bbox = box;
  }
  return result;
}

/// Writes labels.png and instances.json into `dir`, creating it if needed.
inline void write_pipeline_outputs(const PipelineResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_label_png(dir + "/labels.png", result.labels);
  write_instances_json(dir + "/instances.json", result.records);
}

/// Ground-truth records for a scene: confidence pinned to 1, boxes and areas
/// measured from the instance map.
inline std::vector<InstanceRecord> gt_records(const Scene& scene) {
  std::vector<InstanceRecord> recs(static_cast<size_t>(scene.n_instances()));
  for (size_t i = 0; i < recs.size(); ++i) {
    recs[i].id = static_cast<int>(i) + 1;
    recs[i].class_id = scene.class_map[i + 1];
    recs[i].confidence = 1.0f;
    recs[i].bbox = Box{scene.width, scene.height, 0, 0};
  }
  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) {
      int id = scene.instance_map.at(y, x);
      if (id == 0) continue;
      InstanceRecord& rec = recs[static_cast<size_t>(id - 1)];
      rec.area += 1;
      rec.bbox.x0 = std::min(rec.bbox.x0, x);
      rec.bbox.y0 = std::min(rec.bbox.y0, y);
      rec.bbox.x1 = std::max(rec.bbox.x1, x + 1);
      rec.bbox.y1 = std::max(rec.bbox.y1, y + 1);
    }
  return recs;
}

/// Reassembles a scene from a written label map plus instance records.
inline Scene scene_from_files(const std::string& labels_png,
                              const std::string& instances_json) {
  Scene scene;
  scene.instance_map = read_label_png(labels_png);
  scene.height = scene.instance_map.h;
  scene.width = scene.instance_map.w;
  std::vector<InstanceRecord> recs = read_instances_json(instances_json);
  int max_id = 0;
  for (const InstanceRecord& r : recs) max_id = std::max(max_id, r.id);
  scene.class_map.assign(static_cast<size_t>(max_id) + 1, 0);
  for (const InstanceRecord& r : recs) {
    if (r.id < 1) throw std::invalid_argument("instance ids must start at 1");
    scene.class_map[static_cast<size_t>(r.id)] = r.class_id;
  }
  for (size_t i = 1; i < scene.class_map.size(); ++i)
    if (scene.class_map[i] == 0)
      throw std::invalid_argument("instance ids must be contiguous from 1");
  return scene;
}

}  // namespace agm

#endif  // AGM_PIPELINE_HPP
