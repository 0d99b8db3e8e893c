// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0

#include "agm/roi.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <set>

#include "agm/rng.hpp"
#include "util.hpp"

using agm::Box;
using agm::Grid;
using agm::Mask;
using agm::SuperClassTable;

namespace {

Grid background_semantic(int h, int w) {
  Grid g(h, w, 9);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) g.at(y, x, 0) = 1.0f;
  return g;
}

void set_onehot(Grid& g, int y, int x, int class_id) {
  for (int c = 0; c < g.channels(); ++c) g.at(y, x, c) = 0.0f;
  g.at(y, x, class_id) = 1.0f;
}

}  // namespace

TEST_CASE("superclass foreground follows the argmax rule", "[roi]") {
  SuperClassTable table = SuperClassTable::cityscapes();
  Grid sem = background_semantic(2, 2);
  set_onehot(sem, 0, 0, 3);  // car
  // Ambiguous pixel: background wins.
  sem.at(1, 1, 0) = 0.4f;
  sem.at(1, 1, 1) = 0.35f;
  sem.at(1, 1, 3) = 0.25f;

  Mask vehicles = agm::superclass_foreground(sem, table, 2);
  CHECK(vehicles.at(0, 0) == 1);
  CHECK(vehicles.at(0, 1) == 0);
  CHECK(vehicles.at(1, 1) == 0);
  Mask people = agm::superclass_foreground(sem, table, 1);
  for (uint8_t v : people.v) CHECK(v == 0);
  Mask bikes = agm::superclass_foreground(sem, table, 3);
  for (uint8_t v : bikes.v) CHECK(v == 0);
  CHECK_THROWS_AS(agm::superclass_foreground(sem, table, 4), std::out_of_range);

  SECTION("all-background map is everywhere false") {
    Grid bg = background_semantic(3, 3);
    for (int s = 1; s <= 3; ++s) {
      Mask m = agm::superclass_foreground(bg, table, s);
      for (uint8_t v : m.v) CHECK(v == 0);
    }
  }
  SECTION("exact tie between super-classes is background") {
    Grid tie = background_semantic(1, 1);
    tie.at(0, 0, 0) = 0.0f;
    tie.at(0, 0, 1) = 0.5f;  // person super-class
    tie.at(0, 0, 3) = 0.5f;  // vehicle super-class
    CHECK(agm::superclass_foreground(tie, table, 1).at(0, 0) == 0);
    CHECK(agm::superclass_foreground(tie, table, 2).at(0, 0) == 0);
  }
}

TEST_CASE("superpixel dilation fills aligned tiles", "[roi]") {
  Mask m(64, 64);
  m.at(5, 7) = 1;
  Mask d = agm::superpixel_dilate(m);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) CHECK(d.at(y, x) == 1);
  for (int y = 0; y < 64; ++y)
    for (int x = 32; x < 64; ++x) CHECK(d.at(y, x) == 0);

  SECTION("all-false stays all-false") {
    Mask e(40, 40);
    Mask de = agm::superpixel_dilate(e);
    for (uint8_t v : de.v) CHECK(v == 0);
  }
  SECTION("block 1 is the identity") {
    agm::Rng rng(3);
    Mask r(17, 9);
    for (uint8_t& v : r.v) v = rng.below(2) ? 1 : 0;
    Mask dr = agm::superpixel_dilate(r, 1);
    CHECK(dr.v == r.v);
  }
  SECTION("partial edge tiles are filled too") {
    Mask e(40, 40);  // tiles: [0,32) and [32,40)
    e.at(39, 39) = 1;
    Mask de = agm::superpixel_dilate(e);
    for (int y = 32; y < 40; ++y)
      for (int x = 32; x < 40; ++x) CHECK(de.at(y, x) == 1);
    CHECK(de.at(0, 0) == 0);
  }
  SECTION("monotone under mask inclusion") {
    agm::Rng rng(4);
    Mask small(70, 50), big(70, 50);
    for (size_t i = 0; i < small.v.size(); ++i) {
      small.v[i] = rng.below(20) == 0 ? 1 : 0;
      big.v[i] = small.v[i] | (rng.below(20) == 0 ? 1 : 0);
    }
    Mask ds = agm::superpixel_dilate(small), db = agm::superpixel_dilate(big);
    for (size_t i = 0; i < ds.v.size(); ++i)
      if (ds.v[i]) CHECK(db.v[i] == 1);
  }
}

TEST_CASE("connected components are 8-connected and scanline-ordered", "[roi]") {
  Mask m(8, 8);
  // Diagonal touch joins into one component.
  m.at(1, 1) = 1;
  m.at(2, 2) = 1;
  // Separate component later in scanline order.
  m.at(5, 5) = 1;
  agm::ComponentLabels cl = agm::connected_components8(m);
  CHECK(cl.count == 2);
  CHECK(cl.labels.at(1, 1) == 1);
  CHECK(cl.labels.at(2, 2) == 1);
  CHECK(cl.labels.at(5, 5) == 2);
  CHECK(cl.labels.at(0, 0) == 0);
}

TEST_CASE("roi boxes extend and clip", "[roi]") {
  SECTION("interior tile gains the full extension") {
    Mask m(128, 128);
    for (int y = 32; y < 64; ++y)
      for (int x = 32; x < 64; ++x) m.at(y, x) = 1;
    auto boxes = agm::connected_rois(m, 16);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == Box{16, 16, 80, 80});
  }
  SECTION("two far tiles give two boxes in scanline order") {
    Mask m(256, 256);
    m.at(10, 10) = 1;
    m.at(200, 200) = 1;
    auto boxes = agm::connected_rois(m, 16);
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0] == Box{0, 0, 27, 27});
    CHECK(boxes[1] == Box{184, 184, 217, 217});
  }
  SECTION("edge component clips at zero") {
    Mask m(64, 64);
    m.at(0, 0) = 1;
    auto boxes = agm::connected_rois(m, 16);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0] == Box{0, 0, 17, 17});
  }
  SECTION("every true pixel lies inside a box of its component") {
    agm::Rng rng(21);
    Mask m(97, 83);
    for (uint8_t& v : m.v) v = rng.below(30) == 0 ? 1 : 0;
    agm::RoiExtraction ex = agm::extract_rois(m, 5);
    for (int y = 0; y < m.h; ++y)
      for (int x = 0; x < m.w; ++x) {
        if (!m.at(y, x)) continue;
        int id = ex.components.labels.at(y, x);
        REQUIRE(id >= 1);
        const Box& b = ex.boxes[static_cast<size_t>(id - 1)];
        CHECK((x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1));
      }
  }
}

TEST_CASE("roi resizing targets height 513 with a cap of 4", "[roi]") {
  agm::Roi r200 = agm::resize_roi(Box{0, 0, 100, 200});
  CHECK_THAT(r200.scale, Catch::Matchers::WithinAbs(2.565, 1e-12));
  CHECK(r200.scaled_h == 513);
  CHECK(r200.scaled_w == 257);  // round(100 × 2.565)

  agm::Roi r100 = agm::resize_roi(Box{0, 0, 50, 100});
  CHECK(r100.scale == 4.0);
  CHECK(r100.scaled_h == 400);
  CHECK(r100.scaled_w == 200);

  agm::Roi r600 = agm::resize_roi(Box{0, 0, 300, 600});
  CHECK(r600.scale == 1.0);
  CHECK(r600.scaled_h == 600);
  CHECK(r600.scaled_w == 300);

  CHECK_THROWS_AS(agm::resize_roi(Box{5, 5, 5, 9}), std::invalid_argument);
}

TEST_CASE("nearest-neighbour upscaling is exactly invertible on sets", "[roi]") {
  agm::Rng rng(31);
  for (int iter = 0; iter < 10; ++iter) {
    int h = static_cast<int>(rng.range(4, 40)), w = static_cast<int>(rng.range(4, 40));
    agm::LabelMap src = agmtest::random_labels(rng, h, w, 5);
    double scale = 1.0 + rng.uniform01() * 3.0;
    int oh = static_cast<int>(std::lround(h * scale));
    int ow = static_cast<int>(std::lround(w * scale));
    agm::LabelMap up = agm::nn_resize(src, oh, ow);

    // Mapping scaled pixels back through the same index rule recovers the
    // original labels pixel-for-pixel, and every source pixel is covered.
    std::vector<char> covered(static_cast<size_t>(h) * w, 0);
    for (int y = 0; y < oh; ++y) {
      int sy = agm::nn_source_index(y, oh, h);
      for (int x = 0; x < ow; ++x) {
        int sx = agm::nn_source_index(x, ow, w);
        CHECK(up.at(y, x) == src.at(sy, sx));
        covered[static_cast<size_t>(sy) * w + sx] = 1;
      }
    }
    for (char c : covered) CHECK(c == 1);
  }
}

TEST_CASE("bilinear resampling preserves probability structure", "[roi]") {
  SECTION("constant grids stay constant") {
    Grid g(5, 7, 3);
    for (float& v : g.data()) v = 0.25f;
    Grid up = agm::bilinear_resize(g, 13, 20);
    for (float v : up.data()) CHECK_THAT(v, Catch::Matchers::WithinAbs(0.25f, 1e-6f));
  }
  SECTION("rows still sum to one") {
    agm::Rng rng(8);
    Grid sem = background_semantic(6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        double sum = 0;
        std::vector<double> vals(9);
        for (double& v : vals) { v = rng.uniform01(); sum += v; }
        for (int c = 0; c < 9; ++c) sem.at(y, x, c) = static_cast<float>(vals[c] / sum);
      }
    Grid up = agm::bilinear_resize(sem, 17, 15);
    agm::validate_semantic(up);
  }
}

TEST_CASE("crop extracts the boxed region", "[roi]") {
  Grid g(4, 4, 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      g.at(y, x, 0) = static_cast<float>(y * 4 + x);
      g.at(y, x, 1) = -g.at(y, x, 0);
    }
  Grid c = agm::crop(g, Box{1, 2, 3, 4});
  REQUIRE(c.height() == 2);
  REQUIRE(c.width() == 2);
  CHECK(c.at(0, 0, 0) == 9.0f);
  CHECK(c.at(1, 1, 0) == 14.0f);
  CHECK(c.at(1, 1, 1) == -14.0f);
  CHECK_THROWS_AS(agm::crop(g, Box{2, 2, 5, 3}), std::invalid_argument);

  agm::LabelMap lm(3, 3);
  lm.v = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  agm::LabelMap lc = agm::crop(lm, Box{1, 1, 3, 3});
  CHECK(lc.v == std::vector<int32_t>{5, 6, 8, 9});
  CHECK_THROWS_AS(agm::crop(lm, Box{0, 0, 4, 4}), std::invalid_argument);
}
