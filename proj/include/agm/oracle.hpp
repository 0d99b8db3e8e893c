// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth provider: synthetic labeled scenes plus exact semantic and
// affinity maps derived from them, with optional noise.

#ifndef AGM_ORACLE_HPP
#define AGM_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "agm/grid.hpp"
#include "agm/instance.hpp"
#include "agm/neighbor_scheme.hpp"
#include "agm/rng.hpp"

namespace agm {

struct Scene {
  int height = 0, width = 0;
  LabelMap instance_map;       // 0 = background, instances numbered from 1
  std::vector<int> class_map;  // class of instance id i at index i; [0] unused
  uint64_t seed = 0;

  int n_instances() const { return static_cast<int>(class_map.size()) - 1; }
};

struct NoiseSpec {
  double gaussian_std = 0.0;
  double flip_prob = 0.0;
  uint64_t seed = 0;

  void validate() const {
    if (gaussian_std < 0.0) throw std::invalid_argument("gaussian_std must be >= 0");
    if (flip_prob < 0.0 || flip_prob > 1.0)
      throw std::invalid_argument("flip_prob must be in [0,1]");
  }
};

namespace oracle_detail {

struct Shape {
  bool ellipse = false;
  Box box;  // shape-tight box
};

inline void rasterize(LabelMap& map, const Shape& s, int id) {
  if (!s.ellipse) {
    for (int y = s.box.y0; y < s.box.y1; ++y)
      for (int x = s.box.x0; x < s.box.x1; ++x) map.at(y, x) = id;
    return;
  }
  double cx = (s.box.x0 + s.box.x1) / 2.0, cy = (s.box.y0 + s.box.y1) / 2.0;
  double a = s.box.width() / 2.0, b = s.box.height() / 2.0;
  for (int y = s.box.y0; y < s.box.y1; ++y)
    for (int x = s.box.x0; x < s.box.x1; ++x) {
      double dx = (x + 0.5 - cx) / a, dy = (y + 0.5 - cy) / b;
      if (dx * dx + dy * dy <= 1.0) map.at(y, x) = id;
    }
}

}  // namespace oracle_detail

/// Places n disjoint instances (rectangles and ellipses, classes 1..8);
/// with probability fragment_prob an instance is two copies of one shape
/// separated by a small gap along one axis, so longer-range affinities are
/// the only bridge. Instances keep at least two background pixels between
/// each other. Throws after too many failed placement attempts.
inline Scene synth_scene(int height, int width, int n_instances, double fragment_prob,
                         uint64_t seed) {
  if (height < 64 || width < 64) throw std::invalid_argument("scene dims must be >= 64");
  if (n_instances < 1) throw std::invalid_argument("need at least one instance");
  if (fragment_prob < 0.0 || fragment_prob > 1.0)
    throw std::invalid_argument("fragment_prob must be in [0,1]");

  Scene scene;
  scene.height = height;
  scene.width = width;
  scene.seed = seed;
  scene.instance_map = LabelMap(height, width);
  scene.class_map.assign(1, 0);

  Rng rng(seed);
  std::vector<Box> taken;  // instance-tight bounding boxes
  auto disjoint = [&taken](const Box& b) {
    for (const Box& t : taken) {
      bool apart = b.x1 + 2 <= t.x0 || t.x1 + 2 <= b.x0 || b.y1 + 2 <= t.y0 ||
                   t.y1 + 2 <= b.y0;
      if (!apart) return false;
    }
    return true;
  };

  // Shape extents shrink as instances multiply so dense scenes stay
  // packable; big sparse scenes get the full size range. Fragment copies
  // keep >= 20 px along the split axis so scheme offsets always land on
  // both sides of the gap after ROI scaling.
  int grid = 1;
  while (grid * grid < n_instances) ++grid;
  int cap = std::max(24, std::min(96, std::min(height, width) / grid - 4));
  int frag_along_max =
      std::max(20, std::min(40, (std::min(height, width) - 15) / 2));

  // A box drawn early can strand the rest, so retry whole arrangements.
  for (int round = 0; round < 50; ++round) {
    std::fill(scene.instance_map.v.begin(), scene.instance_map.v.end(), 0);
    scene.class_map.assign(1, 0);
    taken.clear();
    bool all_placed = true;
    for (int inst = 1; inst <= n_instances && all_placed; ++inst) {
      bool placed = false;
      for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
        bool fragmented = rng.uniform01() < fragment_prob;
        bool ellipse = rng.below(2) == 1;
        int gap = 0, ew, eh;
        bool split_x = false;
        if (fragmented) {
          split_x = rng.below(2) == 1;
          gap = static_cast<int>(rng.range(8, 12));
          int along = static_cast<int>(rng.range(20, frag_along_max));
          int across = static_cast<int>(rng.range(20, cap));
          ew = split_x ? along : across;
          eh = split_x ? across : along;
        } else {
          ew = static_cast<int>(rng.range(24, cap));
          eh = static_cast<int>(rng.range(24, cap));
        }
        int total_w = fragmented && split_x ? 2 * ew + gap : ew;
        int total_h = fragmented && !split_x ? 2 * eh + gap : eh;
        if (total_w + 2 >= width || total_h + 2 >= height) continue;
        int x0 = static_cast<int>(rng.below(static_cast<uint64_t>(width - total_w)));
        int y0 = static_cast<int>(rng.below(static_cast<uint64_t>(height - total_h)));
        Box bbox{x0, y0, x0 + total_w, y0 + total_h};
        if (!disjoint(bbox)) continue;

        oracle_detail::Shape first{ellipse, Box{x0, y0, x0 + ew, y0 + eh}};
        oracle_detail::rasterize(scene.instance_map, first, inst);
        if (fragmented) {
          int fx = split_x ? x0 + ew + gap : x0;
          int fy = split_x ? y0 : y0 + eh + gap;
          oracle_detail::Shape second{ellipse, Box{fx, fy, fx + ew, fy + eh}};
          oracle_detail::rasterize(scene.instance_map, second, inst);
        }
        taken.push_back(bbox);
        scene.class_map.push_back(static_cast<int>(rng.range(1, 8)));
        placed = true;
      }
      all_placed = placed;
    }
    if (all_placed) return scene;
  }
  throw std::runtime_error("infeasible packing: " + std::to_string(n_instances) +
                           " instances do not fit a " + std::to_string(height) +
                           "x" + std::to_string(width) + " scene");
}

/// One-hot class probabilities blended with a uniform floor: the true channel
/// gets 1-softness plus its share of the floor.
inline Grid gt_semantic(const LabelMap& instance_map, const std::vector<int>& class_map,
                        int class_count = 8, double softness = 0.0) {
  if (softness < 0.0 || softness >= 0.5)
    throw std::invalid_argument("softness must be in [0, 0.5)");
  Grid sem(instance_map.h, instance_map.w, class_count + 1);
  const float floor_p = static_cast<float>(softness / (class_count + 1));
  const float top = static_cast<float>(1.0 - softness);
  for (int y = 0; y < instance_map.h; ++y) {
    for (int x = 0; x < instance_map.w; ++x) {
      float* p = sem.pixel(y, x);
      for (int c = 0; c <= class_count; ++c) p[c] = floor_p;
      int id = instance_map.at(y, x);
      int cls = id == 0 ? 0 : class_map.at(static_cast<size_t>(id));
      p[cls] += top;
    }
  }
  return sem;
}

inline Grid gt_semantic(const Scene& scene, double softness = 0.0) {
  return gt_semantic(scene.instance_map, scene.class_map, 8, softness);
}

/// Channel is 1 exactly when both endpoints are in bounds, foreground, and
/// share an instance id.
inline Grid gt_affinity(const LabelMap& instance_map) {
  const int h = instance_map.h, w = instance_map.w;
  Grid aff(h, w, scheme::kChannelCount);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int id = instance_map.at(y, x);
      if (id == 0) continue;
      for (int c = 0; c < scheme::kChannelCount; ++c) {
        Offset off = scheme::channel_offset(c);
        int qx = x + off.dx, qy = y + off.dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        if (instance_map.at(qy, qx) == id) aff.at(y, x, c) = 1.0f;
      }
    }
  }
  return aff;
}

inline Grid gt_affinity(const Scene& scene) { return gt_affinity(scene.instance_map); }

/// Per-value noise in a fixed scan order: flip to uniform with flip_prob,
/// otherwise jitter by Gaussian(0, std) and clamp to [0,1].
inline Grid perturb(const Grid& affinity, const NoiseSpec& noise) {
  noise.validate();
  Grid out = affinity;
  if (noise.flip_prob == 0.0 && noise.gaussian_std == 0.0) return out;
  Rng rng(noise.seed);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      float* p = out.pixel(y, x);
      for (int c = 0; c < out.channels(); ++c) {
        double u = rng.uniform01();
        if (u < noise.flip_prob) {
          p[c] = static_cast<float>(rng.uniform01());
        } else if (noise.gaussian_std > 0.0) {
          double v = p[c] + noise.gaussian_std * rng.gaussian();
          p[c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

}  // namespace agm

#endif  // AGM_ORACLE_HPP
