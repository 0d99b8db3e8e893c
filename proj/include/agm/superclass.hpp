// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_SUPERCLASS_HPP
#define AGM_SUPERCLASS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace agm {

/// Total map from foreground class ids 1..m to super-class ids.
class SuperClassTable {
 public:
  // `mapping[i]` is the super-class of class i+1.
  explicit SuperClassTable(std::vector<int> mapping) : map_(std::move(mapping)) {
    if (map_.empty()) throw std::invalid_argument("empty super-class table");
    for (int s : map_)
      if (s < 1) throw std::invalid_argument("super-class ids must be positive");
  }

  int class_count() const { return static_cast<int>(map_.size()); }

  int superclass_of(int class_id) const {
    if (class_id < 1 || class_id > class_count())
      throw std::out_of_range("class id out of range: " + std::to_string(class_id));
    return map_[static_cast<size_t>(class_id - 1)];
  }

  int superclass_count() const {
    int hi = 0;
    for (int s : map_) hi = std::max(hi, s);
    return hi;
  }

  /// Eight street-scene classes in three groups: person/rider, four vehicle
  /// classes, and the two-wheelers motorcycle/bicycle.
  static SuperClassTable cityscapes() {
    return SuperClassTable({1, 1, 2, 2, 2, 2, 3, 3});
  }

  static constexpr int kMotorcycle = 7;
  static constexpr int kBicycle = 8;

 private:
  std::vector<int> map_;
};

}  // namespace agm

#endif  // AGM_SUPERCLASS_HPP
