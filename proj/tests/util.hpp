// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef AGM_TESTS_UTIL_HPP
#define AGM_TESTS_UTIL_HPP

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "agm/grid.hpp"
#include "agm/rng.hpp"

namespace agmtest {

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<uint64_t> counter{0};
    auto base = std::filesystem::temp_directory_path();
    path = base / ("agm_test_" + std::to_string(::getpid()) + "_" +
                   std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline agm::Grid random_grid(agm::Rng& rng, int h, int w, int c) {
  agm::Grid g(h, w, c);
  for (float& v : g.data()) v = static_cast<float>(rng.uniform01());
  return g;
}

inline agm::LabelMap random_labels(agm::Rng& rng, int h, int w, int max_id) {
  agm::LabelMap m(h, w);
  for (int32_t& v : m.v) v = static_cast<int32_t>(rng.below(static_cast<uint64_t>(max_id) + 1));
  return m;
}

}  // namespace agmtest

#endif  // AGM_TESTS_UTIL_HPP
