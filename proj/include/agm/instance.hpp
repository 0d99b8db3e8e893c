// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_INSTANCE_HPP
#define AGM_INSTANCE_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace agm {

/// Axis-aligned box, inclusive-exclusive: covers x ∈ [x0,x1), y ∈ [y0,y1).
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const Box&) const = default;
};

struct InstanceRecord {
  int id = 0;          // positive, unique per image
  int class_id = 0;    // foreground class in [1..m]
  float confidence = 0.0f;
  Box bbox;
  int64_t area = 0;

  bool operator==(const InstanceRecord&) const = default;
};

inline void write_instances_json(const std::string& path,
                                 std::vector<InstanceRecord> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const InstanceRecord& a, const InstanceRecord& b) {
                     return a.confidence > b.confidence;
                   });
  nlohmann::json arr = nlohmann::json::array();
  for (const InstanceRecord& r : records) {
    arr.push_back({{"id", r.id},
                   {"class_id", r.class_id},
                   {"confidence", r.confidence},
                   {"bbox", {r.bbox.x0, r.bbox.y0, r.bbox.x1, r.bbox.y1}},
                   {"area", r.area}});
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << arr.dump(2) << "\n";
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::vector<InstanceRecord> read_instances_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json arr = nlohmann::json::parse(f);
  if (!arr.is_array()) throw std::runtime_error("instances file is not a JSON array");
  std::vector<InstanceRecord> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    InstanceRecord r;
    r.id = e.at("id").get<int>();
    r.class_id = e.at("class_id").get<int>();
    r.confidence = e.at("confidence").get<float>();
    const auto& b = e.at("bbox");
    r.bbox = Box{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                 b.at(3).get<int>()};
    r.area = e.at("area").get<int64_t>();
    out.push_back(r);
  }
  return out;
}

}  // namespace agm

#endif  // AGM_INSTANCE_HPP
