// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Semantic refinement of raw pixel affinities and symmetrization into
// undirected edge weights.

#ifndef AGM_AFFINITY_HPP
#define AGM_AFFINITY_HPP

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "agm/grid.hpp"
#include "agm/neighbor_scheme.hpp"
#include "agm/superclass.hpp"

namespace agm {

/// Rescaled sigmoid, zero at zero and approaching 1 for large alpha*x.
inline double sigma(double x, double alpha = 5.0) {
  return 2.0 * (1.0 / (1.0 + std::exp(-alpha * x)) - 0.5);
}

/// Foreground class with the highest probability; ties take the smaller id.
inline int argmax_foreground_class(const Grid& semantic, int y, int x) {
  const float* p = semantic.pixel(y, x);
  int best = 1;
  for (int c = 2; c < semantic.channels(); ++c)
    if (p[c] > p[best]) best = c;
  return best;
}

/// Super-class whose summed foreground probability is highest; ties take the
/// smaller id.
inline int argmax_superclass(const Grid& semantic, int y, int x,
                             const SuperClassTable& table) {
  const float* p = semantic.pixel(y, x);
  int n = table.superclass_count();
  std::vector<double> sums(static_cast<size_t>(n) + 1, 0.0);
  for (int c = 1; c < semantic.channels(); ++c)
    sums[static_cast<size_t>(table.superclass_of(c))] += p[c];
  int best = 1;
  for (int s = 2; s <= n; ++s)
    if (sums[static_cast<size_t>(s)] > sums[static_cast<size_t>(best)]) best = s;
  return best;
}

/// Foreground inner product of two semantic vectors, forced to zero when the
/// pixels' dominant super-classes differ.
inline double semantic_inner_product(const Grid& semantic, int y1, int x1, int y2,
                                     int x2, const SuperClassTable& table) {
  if (argmax_superclass(semantic, y1, x1, table) !=
      argmax_superclass(semantic, y2, x2, table))
    return 0.0;
  const float* a = semantic.pixel(y1, x1);
  const float* b = semantic.pixel(y2, x2);
  double acc = 0.0;
  for (int c = 1; c < semantic.channels(); ++c)
    acc += static_cast<double>(a[c]) * static_cast<double>(b[c]);
  return acc;
}

namespace detail {

// Per-pixel dominant super-class, computed once per map.
inline std::vector<int> superclass_field(const Grid& semantic,
                                         const SuperClassTable& table) {
  std::vector<int> field(static_cast<size_t>(semantic.height()) * semantic.width());
  for (int y = 0; y < semantic.height(); ++y)
    for (int x = 0; x < semantic.width(); ++x)
      field[static_cast<size_t>(y) * semantic.width() + x] =
          argmax_superclass(semantic, y, x, table);
  return field;
}

}  // namespace detail

/// Scales every affinity channel by sigma of the endpoints' semantic inner
/// product. Channels whose neighbor falls outside the image keep their value.
inline Grid refine_affinity(const Grid& affinity, const Grid& semantic,
                            const SuperClassTable& table, double alpha = 5.0) {
  if (affinity.height() != semantic.height() || affinity.width() != semantic.width())
    throw std::invalid_argument("affinity and semantic dimensions differ");
  if (affinity.channels() != scheme::kChannelCount)
    throw std::invalid_argument("affinity map must have 56 channels");

  const int h = affinity.height(), w = affinity.width(), m = semantic.channels() - 1;
  std::vector<int> sc = detail::superclass_field(semantic, table);
  Grid out = affinity;

  // The inner product is symmetric, so each pair is evaluated once through
  // its canonical channel and applied to both directions.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float* pa = semantic.pixel(y, x);
      int psc = sc[static_cast<size_t>(y) * w + x];
      for (int c = 0; c < scheme::kChannelCount; ++c) {
        if (!scheme::is_canonical(c)) continue;
        Offset off = scheme::channel_offset(c);
        int qx = x + off.dx, qy = y + off.dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        int oc = scheme::opposite_channel(c);
        float fwd = affinity.at(y, x, c), rev = affinity.at(qy, qx, oc);
        // factor * (+-0) keeps the sign bit, so zero pairs need no factor.
        if (fwd == 0.0f && rev == 0.0f) continue;
        double factor = 0.0;
        if (psc == sc[static_cast<size_t>(qy) * w + qx]) {
          const float* pb = semantic.pixel(qy, qx);
          double ip = 0.0;
          for (int k = 1; k <= m; ++k)
            ip += static_cast<double>(pa[k]) * static_cast<double>(pb[k]);
          factor = sigma(ip, alpha);
        }
        out.at(y, x, c) = static_cast<float>(factor * fwd);
        out.at(qy, qx, oc) = static_cast<float>(factor * rev);
      }
    }
  }
  return out;
}

/// Applies sigma to longest-distance channels whose two endpoints are both
/// dominated by classes of `pair` (commonly motorcycle and bicycle, which the
/// refinement otherwise suppresses when they are confused with each other).
inline Grid remap_cross_class_d64(const Grid& refined, const Grid& semantic,
                                  const SuperClassTable& table,
                                  std::pair<int, int> pair = {SuperClassTable::kMotorcycle,
                                                              SuperClassTable::kBicycle},
                                  double alpha = 5.0) {
  if (refined.height() != semantic.height() || refined.width() != semantic.width())
    throw std::invalid_argument("affinity and semantic dimensions differ");
  if (table.superclass_of(pair.first) != table.superclass_of(pair.second))
    throw std::invalid_argument("remap pair must share a super-class");

  const int h = refined.height(), w = refined.width();
  std::vector<int> cls(static_cast<size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      cls[static_cast<size_t>(y) * w + x] = argmax_foreground_class(semantic, y, x);
  auto in_pair = [&pair](int c) { return c == pair.first || c == pair.second; };

  Grid out = refined;
  const int last = scheme::kDistanceCount - 1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!in_pair(cls[static_cast<size_t>(y) * w + x])) continue;
      for (int r = 0; r < scheme::kOffsetsPerDistance; ++r) {
        int c = scheme::channel_index(last, r);
        Offset off = scheme::channel_offset(c);
        int qx = x + off.dx, qy = y + off.dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        if (!in_pair(cls[static_cast<size_t>(qy) * w + qx])) continue;
        out.at(y, x, c) = static_cast<float>(sigma(refined.at(y, x, c), alpha));
      }
    }
  }
  return out;
}

/// Averages each channel with the reverse direction stored at the neighbor.
/// Border channels without an in-bounds neighbor keep their single value.
inline Grid symmetrize(const Grid& affinity) {
  if (affinity.channels() != scheme::kChannelCount)
    throw std::invalid_argument("affinity map must have 56 channels");
  const int h = affinity.height(), w = affinity.width();
  Grid out = affinity;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < scheme::kChannelCount; ++c) {
        if (!scheme::is_canonical(c)) continue;
        Offset off = scheme::channel_offset(c);
        int qx = x + off.dx, qy = y + off.dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        int oc = scheme::opposite_channel(c);
        float mean = static_cast<float>(
            (static_cast<double>(affinity.at(y, x, c)) +
             static_cast<double>(affinity.at(qy, qx, oc))) / 2.0);
        out.at(y, x, c) = mean;
        out.at(qy, qx, oc) = mean;
      }
    }
  }
  return out;
}

}  // namespace agm

#endif  // AGM_AFFINITY_HPP
