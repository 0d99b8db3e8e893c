// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_GRID_HPP
#define AGM_GRID_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace agm {

/// Dense float32 grid in [height][width][channels] layout, the in-memory
/// form of every probability map (semantic scores, pixel affinities).
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, int channels, float fill = 0.0f)
      : h_(height), w_(width), c_(channels),
        v_(static_cast<size_t>(height) * width * channels, fill) {
    if (height < 1 || width < 1 || channels < 1)
      throw std::invalid_argument("Grid: all dims must be >= 1");
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  size_t size() const { return v_.size(); }
  bool in_bounds(int x, int y) const { return x >= 0 && x < w_ && y >= 0 && y < h_; }

  float& at(int y, int x, int c) { return v_[idx(y, x, c)]; }
  float at(int y, int x, int c) const { return v_[idx(y, x, c)]; }
  const float* pixel(int y, int x) const { return v_.data() + idx(y, x, 0); }
  float* pixel(int y, int x) { return v_.data() + idx(y, x, 0); }

  std::vector<float>& data() { return v_; }
  const std::vector<float>& data() const { return v_; }

  bool same_shape(const Grid& o) const {
    return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
  }

 private:
  size_t idx(int y, int x, int c) const {
    return (static_cast<size_t>(y) * w_ + x) * c_ + c;
  }
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<float> v_;
};

// Semantic maps are Grids with channels == class count + 1 (channel 0 is
// background); affinity maps are Grids with the 56 neighbor-scheme channels.
using SemanticMap = Grid;
using AffinityMap = Grid;

/// H×W integer id grid (0 = background / unlabeled).
struct LabelMap {
  int h = 0, w = 0;
  std::vector<int32_t> v;

  LabelMap() = default;
  LabelMap(int height, int width, int32_t fill = 0)
      : h(height), w(width), v(static_cast<size_t>(height) * width, fill) {}

  int32_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  int32_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

/// H×W binary mask.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;

  Mask() = default;
  Mask(int height, int width, uint8_t fill = 0)
      : h(height), w(width), v(static_cast<size_t>(height) * width, fill) {}

  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : v) n += b ? 1 : 0;
    return n;
  }
};

/// Throws if `m` is not a plausible per-pixel probability simplex
/// (entries in [0,1], rows summing to 1 within 1e-4).
inline void validate_semantic(const Grid& m) {
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < m.channels(); ++c) {
        float p = m.at(y, x, c);
        if (p < 0.0f || p > 1.0f)
          throw std::invalid_argument("semantic map entry outside [0,1]");
        s += p;
      }
      if (s < 1.0 - 1e-4 || s > 1.0 + 1e-4)
        throw std::invalid_argument("semantic map row does not sum to 1: " +
                                    std::to_string(s));
    }
  }
}

}  // namespace agm

#endif  // AGM_GRID_HPP
