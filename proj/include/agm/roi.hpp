// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Background exclusion: per-super-class foreground masks, super-pixel
// dilation, connected components, ROI boxes, and resampling helpers.

#ifndef AGM_ROI_HPP
#define AGM_ROI_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "agm/grid.hpp"
#include "agm/instance.hpp"
#include "agm/superclass.hpp"

namespace agm {

struct Roi {
  int superclass_id = 0;
  Box bbox;                 // original-image coordinates, extension applied
  double scale = 1.0;
  int scaled_h = 0, scaled_w = 0;
};

/// Pixels whose summed probability for this super-class strictly exceeds the
/// background probability and every other super-class sum.
inline Mask superclass_foreground(const Grid& semantic, const SuperClassTable& table,
                                  int superclass_id) {
  if (superclass_id < 1 || superclass_id > table.superclass_count())
    throw std::out_of_range("unknown super-class: " + std::to_string(superclass_id));
  const int h = semantic.height(), w = semantic.width();
  const int n = table.superclass_count();
  Mask out(h, w);
  std::vector<double> sums(static_cast<size_t>(n) + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::fill(sums.begin(), sums.end(), 0.0);
      const float* p = semantic.pixel(y, x);
      for (int c = 1; c < semantic.channels(); ++c)
        sums[static_cast<size_t>(table.superclass_of(c))] += p[c];
      double mine = sums[static_cast<size_t>(superclass_id)];
      bool fg = mine > p[0];
      for (int s = 1; s <= n && fg; ++s)
        if (s != superclass_id && sums[static_cast<size_t>(s)] >= mine) fg = false;
      out.at(y, x) = fg ? 1 : 0;
    }
  }
  return out;
}

/// Marks whole aligned block×block tiles true when they contain any true
/// pixel; edge tiles may be partial.
inline Mask superpixel_dilate(const Mask& mask, int block = 32) {
  if (block < 1) throw std::invalid_argument("block must be >= 1");
  Mask out(mask.h, mask.w);
  for (int ty = 0; ty < mask.h; ty += block) {
    int ey = std::min(ty + block, mask.h);
    for (int tx = 0; tx < mask.w; tx += block) {
      int ex = std::min(tx + block, mask.w);
      bool any = false;
      for (int y = ty; y < ey && !any; ++y)
        for (int x = tx; x < ex && !any; ++x)
          if (mask.at(y, x)) any = true;
      if (!any) continue;
      for (int y = ty; y < ey; ++y)
        for (int x = tx; x < ex; ++x) out.at(y, x) = 1;
    }
  }
  return out;
}

struct ComponentLabels {
  LabelMap labels;   // 0 = background, components numbered from 1
  int count = 0;
};

/// 8-connected components, numbered by scanline order of each component's
/// first pixel.
inline ComponentLabels connected_components8(const Mask& mask) {
  ComponentLabels out{LabelMap(mask.h, mask.w), 0};
  std::vector<std::pair<int, int>> queue;
  for (int y = 0; y < mask.h; ++y) {
    for (int x = 0; x < mask.w; ++x) {
      if (!mask.at(y, x) || out.labels.at(y, x) != 0) continue;
      int id = ++out.count;
      queue.clear();
      queue.push_back({y, x});
      out.labels.at(y, x) = id;
      for (size_t head = 0; head < queue.size(); ++head) {
        auto [cy, cx] = queue[head];
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dy == 0 && dx == 0) continue;
            int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || ny >= mask.h || nx < 0 || nx >= mask.w) continue;
            if (!mask.at(ny, nx) || out.labels.at(ny, nx) != 0) continue;
            out.labels.at(ny, nx) = id;
            queue.push_back({ny, nx});
          }
        }
      }
    }
  }
  return out;
}

struct RoiExtraction {
  ComponentLabels components;
  std::vector<Box> boxes;  // boxes[i] belongs to component id i+1
};

/// Tight component bboxes expanded by `extension` on every side, clipped to
/// the image.
inline RoiExtraction extract_rois(const Mask& mask, int extension = 16) {
  RoiExtraction out{connected_components8(mask), {}};
  std::vector<Box> tight(static_cast<size_t>(out.components.count),
                         Box{mask.w, mask.h, 0, 0});
  for (int y = 0; y < mask.h; ++y) {
    for (int x = 0; x < mask.w; ++x) {
      int id = out.components.labels.at(y, x);
      if (id == 0) continue;
      Box& b = tight[static_cast<size_t>(id - 1)];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  out.boxes.reserve(tight.size());
  for (const Box& b : tight)
    out.boxes.push_back(Box{std::max(0, b.x0 - extension), std::max(0, b.y0 - extension),
                            std::min(mask.w, b.x1 + extension),
                            std::min(mask.h, b.y1 + extension)});
  return out;
}

inline std::vector<Box> connected_rois(const Mask& mask, int extension = 16) {
  return extract_rois(mask, extension).boxes;
}

/// Scale chosen so short boxes grow toward `target_height`, capped at
/// `max_scale`; boxes at least target_height tall keep scale 1.
inline Roi resize_roi(const Box& bbox, int target_height = 513, double max_scale = 4.0) {
  if (bbox.empty()) throw std::invalid_argument("empty roi bbox");
  Roi roi;
  roi.bbox = bbox;
  roi.scale = bbox.height() < target_height
                  ? std::min(max_scale, static_cast<double>(target_height) / bbox.height())
                  : 1.0;
  roi.scaled_h = static_cast<int>(std::lround(bbox.height() * roi.scale));
  roi.scaled_w = static_cast<int>(std::lround(bbox.width() * roi.scale));
  return roi;
}

/// Pixel-center-aligned source index for nearest-neighbour resampling.
inline int nn_source_index(int i, int out_size, int src_size) {
  int s = static_cast<int>((i + 0.5) * src_size / out_size);
  return std::clamp(s, 0, src_size - 1);
}

inline LabelMap nn_resize(const LabelMap& src, int out_h, int out_w) {
  LabelMap out(out_h, out_w);
  for (int y = 0; y < out_h; ++y) {
    int sy = nn_source_index(y, out_h, src.h);
    for (int x = 0; x < out_w; ++x)
      out.at(y, x) = src.at(sy, nn_source_index(x, out_w, src.w));
  }
  return out;
}

/// Bilinear resampling with pixel-center alignment; used for probability
/// grids, which stay valid under convex blending.
inline Grid bilinear_resize(const Grid& src, int out_h, int out_w) {
  Grid out(out_h, out_w, src.channels());
  const int ch = src.channels();
  for (int y = 0; y < out_h; ++y) {
    double sy = (y + 0.5) * src.height() / out_h - 0.5;
    double cy = std::clamp(sy, 0.0, static_cast<double>(src.height() - 1));
    int y0 = static_cast<int>(cy);
    int y1 = std::min(y0 + 1, src.height() - 1);
    double fy = cy - y0;
    for (int x = 0; x < out_w; ++x) {
      double sx = (x + 0.5) * src.width() / out_w - 0.5;
      double cx = std::clamp(sx, 0.0, static_cast<double>(src.width() - 1));
      int x0 = static_cast<int>(cx);
      int x1 = std::min(x0 + 1, src.width() - 1);
      double fx = cx - x0;
      const float* p00 = src.pixel(y0, x0);
      const float* p01 = src.pixel(y0, x1);
      const float* p10 = src.pixel(y1, x0);
      const float* p11 = src.pixel(y1, x1);
      float* o = out.pixel(y, x);
      for (int c = 0; c < ch; ++c) {
        double top = p00[c] + (p01[c] - p00[c]) * fx;
        double bot = p10[c] + (p11[c] - p10[c]) * fx;
        o[c] = static_cast<float>(top + (bot - top) * fy);
      }
    }
  }
  return out;
}

inline Grid crop(const Grid& src, const Box& b) {
  if (b.empty() || b.x0 < 0 || b.y0 < 0 || b.x1 > src.width() || b.y1 > src.height())
    throw std::invalid_argument("crop box outside grid");
  Grid out(b.height(), b.width(), src.channels());
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x)
      for (int c = 0; c < src.channels(); ++c)
        out.at(y, x, c) = src.at(b.y0 + y, b.x0 + x, c);
  return out;
}

inline LabelMap crop(const LabelMap& src, const Box& b) {
  if (b.empty() || b.x0 < 0 || b.y0 < 0 || b.x1 > src.w || b.y1 > src.h)
    throw std::invalid_argument("crop box outside labels");
  LabelMap out(b.height(), b.width());
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x) out.at(y, x) = src.at(b.y0 + y, b.x0 + x);
  return out;
}

}  // namespace agm

#endif  // AGM_ROI_HPP
