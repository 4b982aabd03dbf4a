// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include <random>

#include "earthforge/geometry.hpp"
#include "oracles.hpp"

using namespace earthforge;

namespace {

RotatedBox random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 100.0), ang(-179.999, 180.0);
  return make_box(pos(rng), pos(rng), pos(rng), pos(rng), ang(rng));
}

oracle::Box as_oracle(const RotatedBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max, b.theta}; }

}  // namespace

TEST_CASE("exact IoU cases") {
  const RotatedBox a = make_box(10.0, 10.0, 30.0, 40.0, 25.0);
  CHECK(rotated_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  const RotatedBox s1 = make_box(0.0, 0.0, 2.0, 2.0), s2 = make_box(1.0, 0.0, 3.0, 2.0);
  CHECK(std::abs(rotated_iou(s1, s2) - 1.0 / 3.0) <= 1e-12);
  CHECK(rotated_iou(s1, make_box(5.0, 5.0, 6.0, 6.0)) == 0.0);
  CHECK(rotated_iou(s1, make_box(1.0, 1.0, 1.0, 2.0)) == 0.0);  // degenerate
  // A square rotated by 90 degrees covers itself.
  CHECK(rotated_iou(s1, make_box(0.0, 0.0, 2.0, 2.0, 90.0)) == doctest::Approx(1.0).epsilon(1e-12));
  // Contained box: IoU is the area ratio.
  CHECK(rotated_iou(make_box(0.0, 0.0, 10.0, 10.0), make_box(2.0, 2.0, 4.0, 7.0)) ==
        doctest::Approx(10.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("IoU agrees with a Monte-Carlo estimate") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    const RotatedBox a = random_box(rng), b = random_box(rng);
    const double mc = oracle::monte_carlo_iou(as_oracle(a), as_oracle(b), 200'000, 100 + i);
    CHECK(std::abs(rotated_iou(a, b) - mc) <= 0.02);
  }
}

TEST_CASE("IoU is symmetric and rotation invariant") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ang(-180.0, 180.0);
  for (int i = 0; i < 200; ++i) {
    const RotatedBox a = random_box(rng), b = random_box(rng);
    const double iou = rotated_iou(a, b);
    CHECK(iou >= 0.0);
    CHECK(iou <= 1.0);
    CHECK(std::abs(iou - rotated_iou(b, a)) <= 1e-9);
    const RotatedBox::Point pivot(50.0, 50.0);
    const double t = ang(rng);
    CHECK(std::abs(iou - rotated_iou(rotate_about(a, pivot, t), rotate_about(b, pivot, t))) <= 1e-9);
  }
}

TEST_CASE("corners turn counterclockwise") {
  const auto c = corners(make_box(0.0, 0.0, 2.0, 2.0, 90.0));
  // (x_min, y_min) = (0,0) rotated 90 degrees about (1,1) lands on (2,0).
  CHECK(c[0].x() == doctest::Approx(2.0));
  CHECK(c[0].y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(signed_area<double>(std::span<const RotatedBox::Point>(c)) == doctest::Approx(4.0));
}

TEST_CASE("angles wrap into (-180, 180]") {
  CHECK(wrap_degrees(180.0) == 180.0);
  CHECK(wrap_degrees(-180.0) == 180.0);
  CHECK(wrap_degrees(540.0) == 180.0);
  CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
  CHECK(is_valid(make_box(0.0, 0.0, 100.0, 100.0, -180.0)));
  CHECK_FALSE(is_valid(RotatedBox{0, 0, 101, 5, 0}));
}

TEST_CASE("box text round trips") {
  const std::string text = "There are two: [10,20,30,40,0] and [55.5,12,60,80.25,-45].";
  const auto boxes = parse_boxes(text);
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[1] == RotatedBox{55.5, 12, 60, 80.25, -45});
  CHECK(render_boxes(boxes) == "[10,20,30,40,0], [55.50,12,60,80.25,-45]");
  CHECK(parse_boxes(render_boxes(boxes)) == boxes);
  // Swapped corners are reordered, a four-number box has theta 0, and
  // out-of-frame boxes are dropped.
  const auto swapped = parse_boxes("[30,40,10,20] [0,0,120,5,0]");
  REQUIRE(swapped.size() == 1);
  CHECK(swapped[0] == RotatedBox{10, 20, 30, 40, 0});
  CHECK(parse_boxes("no boxes [1,2,3]").empty());
}

TEST_CASE("size and count classes") {
  const SizeThresholds t;
  CHECK(size_class(make_box(0.0, 0.0, 5.0, 5.0)) == SizeClass::Small);
  CHECK(size_class(make_box(0.0, 0.0, 10.0, 10.0)) == SizeClass::Medium);
  CHECK(size_class(make_box(0.0, 0.0, 50.0, 50.0)) == SizeClass::Large);
  CHECK(size_class(RotatedBox{0, 0, t.small_max_area, 1, 0}) == SizeClass::Medium);
  CHECK(name(SizeClass::Medium) == "medium");
  CHECK(count_class(1) == CountClass::Single);
  CHECK(count_class(3) == CountClass::Multiple);
  CHECK_THROWS_AS(count_class(0), Error);
  CHECK_THROWS_AS(size_class(make_box(0.0, 0.0, 1.0, 1.0), SizeThresholds{5.0, 1.0}), Error);
}
