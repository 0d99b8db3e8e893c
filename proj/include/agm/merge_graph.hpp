// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Greedy graph merging over super-pixels. Vertices start as foreground
// pixels, a forced local merge coarsens aligned tiles, then three stages of
// maximum-edge contraction run with decreasing thresholds while longer-range
// edges are folded in between stages.

#ifndef AGM_MERGE_GRAPH_HPP
#define AGM_MERGE_GRAPH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "agm/affinity.hpp"
#include "agm/grid.hpp"
#include "agm/neighbor_scheme.hpp"

namespace agm {

struct MergeConfig {
  double r_ws = 0.97;    // short-distance stage threshold
  double r_wm = 0.7;     // medium
  double r_wl = 0.3;     // long
  int r_c = 30;          // minimum member count per emitted instance
  int merge_window = 2;  // forced local merge tile size

  void validate() const {
    if (!(0.0 <= r_wl && r_wl <= r_wm && r_wm <= r_ws && r_ws <= 1.0))
      throw std::invalid_argument("stage thresholds must satisfy 0<=r_wl<=r_wm<=r_ws<=1");
    if (r_c < 1) throw std::invalid_argument("r_c must be >= 1");
    if (merge_window != 1 && merge_window != 2 && merge_window != 4)
      throw std::invalid_argument("merge window must be 1, 2 or 4");
  }
};

/// Super-pixel graph over one ROI. Vertex ids are the linear pixel ids of
/// each super-pixel's smallest member; contraction keeps the smaller id.
class MergeGraph {
 public:
  struct Vertex {
    std::vector<int32_t> members;                 // linear pixel ids
    std::vector<std::pair<int32_t, double>> adj;  // sorted by neighbor id
  };

  MergeGraph(int height, int width)
      : h_(height), w_(width), verts_(static_cast<size_t>(height) * width),
        alive_(static_cast<size_t>(height) * width, 0),
        parent_(static_cast<size_t>(height) * width) {
    for (size_t i = 0; i < parent_.size(); ++i) parent_[i] = static_cast<int32_t>(i);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int alive_count() const { return alive_count_; }
  bool is_alive(int v) const { return alive_[static_cast<size_t>(v)] != 0; }
  const Vertex& vertex(int v) const { return verts_[static_cast<size_t>(v)]; }

  std::vector<int32_t> live_ids() const {
    std::vector<int32_t> out;
    out.reserve(static_cast<size_t>(alive_count_));
    for (size_t i = 0; i < alive_.size(); ++i)
      if (alive_[i]) out.push_back(static_cast<int32_t>(i));
    return out;
  }

  /// Current super-pixel holding a pixel (or the pixel itself if untouched).
  int find(int pixel) {
    int root = pixel;
    while (parent_[static_cast<size_t>(root)] != root) root = parent_[static_cast<size_t>(root)];
    while (parent_[static_cast<size_t>(pixel)] != root) {
      int next = parent_[static_cast<size_t>(pixel)];
      parent_[static_cast<size_t>(pixel)] = root;
      pixel = next;
    }
    return root;
  }

  void add_vertex(int id) {
    Vertex& vx = verts_[static_cast<size_t>(id)];
    vx.members.assign(1, static_cast<int32_t>(id));
    alive_[static_cast<size_t>(id)] = 1;
    ++alive_count_;
  }

  bool has_edge(int u, int v) const {
    const auto& adj = verts_[static_cast<size_t>(u)].adj;
    auto it = std::lower_bound(adj.begin(), adj.end(), v,
                               [](const auto& e, int id) { return e.first < id; });
    return it != adj.end() && it->first == v;
  }

  double edge_weight(int u, int v) const {
    const auto& adj = verts_[static_cast<size_t>(u)].adj;
    auto it = std::lower_bound(adj.begin(), adj.end(), v,
                               [](const auto& e, int id) { return e.first < id; });
    if (it == adj.end() || it->first != v) throw std::invalid_argument("edge absent");
    return it->second;
  }

  void set_edge(int u, int v, double w) {
    upsert(u, v, w);
    upsert(v, u, w);
  }

  int64_t edge_count() const {
    int64_t directed = 0;
    for (size_t i = 0; i < verts_.size(); ++i)
      if (alive_[i]) directed += static_cast<int64_t>(verts_[i].adj.size());
    return directed / 2;
  }

  /// Contracts the edge (u,v); the smaller id survives with the union of
  /// neighbors, averaging weights where both endpoints knew a neighbor.
  void contract(int u, int v) {
    if (!has_edge(u, v)) throw std::invalid_argument("contract requires an existing edge");
    merge_vertices(u, v);
  }

  /// Same as contract but does not require an edge between u and v; used by
  /// the forced local merge where tiles may hold non-adjacent pixels.
  void merge_vertices(int u, int v) {
    if (u == v || !is_alive(u) || !is_alive(v))
      throw std::invalid_argument("merge needs two distinct live vertices");
    int s = std::min(u, v), o = std::max(u, v);
    Vertex& sv = verts_[static_cast<size_t>(s)];
    Vertex& ov = verts_[static_cast<size_t>(o)];
    erase_entry(sv.adj, o);
    erase_entry(ov.adj, s);

    // Merge the two sorted adjacency lists; common neighbors average.
    std::vector<std::pair<int32_t, double>> merged;
    merged.reserve(sv.adj.size() + ov.adj.size());
    size_t i = 0, j = 0;
    while (i < sv.adj.size() || j < ov.adj.size()) {
      if (j == ov.adj.size() || (i < sv.adj.size() && sv.adj[i].first < ov.adj[j].first)) {
        merged.push_back(sv.adj[i++]);
      } else if (i == sv.adj.size() || ov.adj[j].first < sv.adj[i].first) {
        merged.push_back(ov.adj[j++]);
      } else {
        merged.push_back({sv.adj[i].first, (sv.adj[i].second + ov.adj[j].second) / 2.0});
        ++i;
        ++j;
      }
    }
    for (const auto& [k, w] : ov.adj) erase_entry(verts_[static_cast<size_t>(k)].adj, o);
    for (const auto& [k, w] : merged) upsert(k, s, w);
    sv.adj = std::move(merged);

    sv.members.insert(sv.members.end(), ov.members.begin(), ov.members.end());
    ov.members.clear();
    ov.members.shrink_to_fit();
    ov.adj.clear();
    ov.adj.shrink_to_fit();
    alive_[static_cast<size_t>(o)] = 0;
    parent_[static_cast<size_t>(o)] = s;
    --alive_count_;
  }

  /// Contracts every aligned window×window tile's foreground pixels into one
  /// vertex, in ascending pixel id order. Must run on the initial pixel graph.
  void force_local_merge(int window) {
    if (window != 1 && window != 2 && window != 4)
      throw std::invalid_argument("merge window must be 1, 2 or 4");
    if (window == 1) return;
    for (int ty = 0; ty < h_; ty += window) {
      for (int tx = 0; tx < w_; tx += window) {
        int first = -1;
        for (int y = ty; y < std::min(ty + window, h_); ++y) {
          for (int x = tx; x < std::min(tx + window, w_); ++x) {
            int id = y * w_ + x;
            if (!alive_[static_cast<size_t>(id)]) continue;
            if (first < 0) first = id;
            else merge_vertices(first, id);
          }
        }
      }
    }
  }

  /// Repeatedly contracts the maximum-weight edge while it is >= threshold.
  /// Ties prefer the smaller endpoint pair. A lazy-deletion heap keeps
  /// selection near O(E log E); stale entries are dropped on pop.
  void merge_stage(double threshold) {
    struct Entry {
      double w;
      int32_t u, v;  // u < v
    };
    struct Less {
      bool operator()(const Entry& a, const Entry& b) const {
        if (a.w != b.w) return a.w < b.w;
        if (a.u != b.u) return a.u > b.u;
        return a.v > b.v;
      }
    };
    std::priority_queue<Entry, std::vector<Entry>, Less> heap;
    for (size_t i = 0; i < verts_.size(); ++i) {
      if (!alive_[i]) continue;
      for (const auto& [k, w] : verts_[i].adj)
        if (k > static_cast<int32_t>(i) && w >= threshold)
          heap.push({w, static_cast<int32_t>(i), k});
    }
    std::vector<std::pair<int32_t, double>> before;
    while (!heap.empty()) {
      Entry e = heap.top();
      heap.pop();
      if (!is_alive(e.u) || !is_alive(e.v) || !has_edge(e.u, e.v)) continue;
      if (edge_weight(e.u, e.v) != e.w) continue;  // superseded by an update
      int s = std::min(e.u, e.v);
      const auto& adj = verts_[static_cast<size_t>(s)].adj;
      before.assign(adj.begin(), adj.end());
      contract(e.u, e.v);
      // Unchanged edges keep a live heap entry, so only new or re-weighted
      // ones need a push; everything else would just bloat the heap.
      size_t i = 0;
      for (const auto& [k, w] : adj) {
        while (i < before.size() && before[i].first < k) ++i;
        if (i < before.size() && before[i].first == k && before[i].second == w) continue;
        if (w >= threshold)
          heap.push({w, static_cast<int32_t>(std::min(s, static_cast<int>(k))),
                     static_cast<int32_t>(std::max(s, static_cast<int>(k)))});
      }
    }
  }

  /// Folds raw pixel-pair weights of the given distance ranks into the
  /// current super-pixel graph. Pairs inside one super-pixel vanish; multiple
  /// pairs between two super-pixels average; an existing edge averages with
  /// the incoming aggregate.
  void add_distance_edges(const Grid& weights, const Mask& fg,
                          std::span<const int> distance_ranks) {
    std::unordered_map<uint64_t, std::pair<double, int64_t>> acc;
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        if (!fg.at(y, x)) continue;
        for (int rank : distance_ranks) {
          for (int orank = 4; orank < 8; ++orank) {  // canonical half
            int c = scheme::channel_index(rank, orank);
            Offset off = scheme::channel_offset(c);
            int qx = x + off.dx, qy = y + off.dy;
            if (qx < 0 || qx >= w_ || qy < 0 || qy >= h_ || !fg.at(qy, qx)) continue;
            int u = find(y * w_ + x), v = find(qy * w_ + qx);
            if (u == v) continue;
            uint64_t key = (static_cast<uint64_t>(std::min(u, v)) << 32) |
                           static_cast<uint32_t>(std::max(u, v));
            auto& slot = acc[key];
            slot.first += static_cast<double>(weights.at(y, x, c));
            slot.second += 1;
          }
        }
      }
    }
    for (const auto& [key, sums] : acc) {
      int u = static_cast<int>(key >> 32), v = static_cast<int>(key & 0xffffffffu);
      double agg = sums.first / static_cast<double>(sums.second);
      if (has_edge(u, v)) agg = (edge_weight(u, v) + agg) / 2.0;
      set_edge(u, v, agg);
    }
  }

 private:
  static void erase_entry(std::vector<std::pair<int32_t, double>>& adj, int id) {
    auto it = std::lower_bound(adj.begin(), adj.end(), id,
                               [](const auto& e, int want) { return e.first < want; });
    if (it != adj.end() && it->first == id) adj.erase(it);
  }

  void upsert(int at, int neighbor, double w) {
    auto& adj = verts_[static_cast<size_t>(at)].adj;
    auto it = std::lower_bound(adj.begin(), adj.end(), neighbor,
                               [](const auto& e, int want) { return e.first < want; });
    if (it != adj.end() && it->first == neighbor) it->second = w;
    else adj.insert(it, {static_cast<int32_t>(neighbor), w});
  }

  int h_, w_;
  std::vector<Vertex> verts_;
  std::vector<uint8_t> alive_;
  std::vector<int32_t> parent_;
  int alive_count_ = 0;
};

/// Pixel graph over the foreground with one edge per symmetrized pair at the
/// requested distance ranks.
inline MergeGraph build_graph(const Grid& weights, const Mask& fg,
                              std::span<const int> distance_ranks) {
  if (weights.height() != fg.h || weights.width() != fg.w)
    throw std::invalid_argument("weights and mask dimensions differ");
  MergeGraph g(fg.h, fg.w);
  for (int y = 0; y < fg.h; ++y)
    for (int x = 0; x < fg.w; ++x)
      if (fg.at(y, x)) g.add_vertex(y * fg.w + x);
  for (int y = 0; y < fg.h; ++y) {
    for (int x = 0; x < fg.w; ++x) {
      if (!fg.at(y, x)) continue;
      for (int rank : distance_ranks) {
        for (int orank = 4; orank < 8; ++orank) {
          int c = scheme::channel_index(rank, orank);
          Offset off = scheme::channel_offset(c);
          int qx = x + off.dx, qy = y + off.dy;
          if (qx < 0 || qx >= fg.w || qy < 0 || qy >= fg.h || !fg.at(qy, qx)) continue;
          g.set_edge(y * fg.w + x, qy * fg.w + qx,
                     static_cast<double>(weights.at(y, x, c)));
        }
      }
    }
  }
  return g;
}

/// Called after the forced local merge (stage 0) and after each threshold
/// stage (1..3); used by tests and diagnostics to watch the partition evolve.
using StageObserver = std::function<void(int stage, const MergeGraph&)>;

inline MergeGraph run_staged_merge(const Grid& weights, const Mask& fg,
                                   const MergeConfig& config,
                                   const StageObserver& observer = {}) {
  config.validate();
  std::array<int, 3> ds = scheme::kShortRanks;
  std::array<int, 2> dm = scheme::kMediumRanks;
  std::array<int, 2> dl = scheme::kLongRanks;

  MergeGraph g = build_graph(weights, fg, ds);
  g.force_local_merge(config.merge_window);
  if (observer) observer(0, g);
  g.merge_stage(config.r_ws);
  if (observer) observer(1, g);
  g.add_distance_edges(weights, fg, dm);
  g.merge_stage(config.r_wm);
  if (observer) observer(2, g);
  g.add_distance_edges(weights, fg, dl);
  g.merge_stage(config.r_wl);
  if (observer) observer(3, g);
  return g;
}

/// One instance inside a single ROI, in scaled-ROI pixel coordinates.
struct RoiInstance {
  std::vector<int32_t> pixels;  // sorted linear ids
  int class_id = 0;
  double confidence = 0.0;
};

/// Filters super-pixels by cardinality and attaches confidence (mean initial
/// weight over scheme pairs internal to the member set) and the majority
/// argmax class.
inline std::vector<RoiInstance> extract_instances(const MergeGraph& graph,
                                                  const Grid& initial_weights,
                                                  const Grid& semantic,
                                                  const MergeConfig& config) {
  config.validate();
  const int h = graph.height(), w = graph.width();
  const int m = semantic.channels() - 1;
  std::vector<uint8_t> member(static_cast<size_t>(h) * w);
  std::vector<RoiInstance> out;

  for (int32_t vid : graph.live_ids()) {
    const auto& members = graph.vertex(vid).members;
    if (static_cast<int>(members.size()) < config.r_c) continue;
    RoiInstance inst;
    inst.pixels.assign(members.begin(), members.end());
    std::sort(inst.pixels.begin(), inst.pixels.end());
    for (int32_t p : inst.pixels) member[static_cast<size_t>(p)] = 1;

    double sum = 0.0;
    int64_t count = 0;
    for (int32_t p : inst.pixels) {
      int py = p / w, px = p % w;
      for (int c = 0; c < scheme::kChannelCount; ++c) {
        if (!scheme::is_canonical(c)) continue;
        Offset off = scheme::channel_offset(c);
        int qx = px + off.dx, qy = py + off.dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        if (!member[static_cast<size_t>(qy) * w + qx]) continue;
        sum += static_cast<double>(initial_weights.at(py, px, c));
        ++count;
      }
    }
    inst.confidence = count > 0 ? sum / static_cast<double>(count) : 0.0;

    std::vector<int64_t> votes(static_cast<size_t>(m) + 1, 0);
    std::vector<double> mass(static_cast<size_t>(m) + 1, 0.0);
    for (int32_t p : inst.pixels) {
      int py = p / w, px = p % w;
      votes[static_cast<size_t>(argmax_foreground_class(semantic, py, px))] += 1;
      const float* sp = semantic.pixel(py, px);
      for (int c = 1; c <= m; ++c) mass[static_cast<size_t>(c)] += sp[c];
    }
    int best = 1;
    for (int c = 2; c <= m; ++c) {
      if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)] ||
          (votes[static_cast<size_t>(c)] == votes[static_cast<size_t>(best)] &&
           mass[static_cast<size_t>(c)] > mass[static_cast<size_t>(best)]))
        best = c;
    }
    inst.class_id = best;

    for (int32_t p : inst.pixels) member[static_cast<size_t>(p)] = 0;
    out.push_back(std::move(inst));
  }
  return out;
}

/// Full-image instance with original-resolution pixels.
struct Instance {
  std::vector<int64_t> pixels;  // sorted linear ids at image resolution
  int class_id = 0;
  double confidence = 0.0;
  int roi_id = 0;
};

inline double pixel_iou(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
  if (a.empty() && b.empty()) return 0.0;
  size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { ++inter; ++i; ++j; }
  }
  size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Orders instances by confidence and drops same-class near-duplicates
/// (IoU >= 0.8), keeping the higher-confidence copy.
inline std::vector<Instance> stitch(std::vector<Instance> instances) {
  std::sort(instances.begin(), instances.end(), [](const Instance& a, const Instance& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.roi_id != b.roi_id) return a.roi_id < b.roi_id;
    int64_t pa = a.pixels.empty() ? -1 : a.pixels.front();
    int64_t pb = b.pixels.empty() ? -1 : b.pixels.front();
    return pa < pb;
  });
  std::vector<Instance> kept;
  for (Instance& cand : instances) {
    bool dup = false;
    for (const Instance& k : kept) {
      if (k.class_id != cand.class_id) continue;
      if (pixel_iou(k.pixels, cand.pixels) >= 0.8) { dup = true; break; }
    }
    if (!dup) kept.push_back(std::move(cand));
  }
  return kept;
}

}  // namespace agm

#endif  // AGM_MERGE_GRAPH_HPP
