// SPDX-License-Identifier: Apache-2.0
#include "earthforge/geometry.hpp"

#include <cstdio>
#include <regex>

namespace earthforge {
namespace {

const std::regex& box_pattern() {
  static const std::regex pattern(
      R"(\[\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*,\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*,)"
      R"(\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*,\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*)"
      R"((?:,\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+))\s*)?\])");
  return pattern;
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  if (v == std::round(v) && std::abs(v) < 1e15)
    std::snprintf(buf, sizeof buf, "%.0f", v);
  else
    std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string_view name(SizeClass s) noexcept {
  switch (s) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "unknown";
}

std::string_view name(CountClass c) noexcept {
  return c == CountClass::Single ? "single" : "multiple";
}

SizeClass size_class(const RotatedBox& box, const SizeThresholds& thresholds) {
  if (!(thresholds.small_max_area > 0) || !(thresholds.medium_max_area > thresholds.small_max_area))
    throw Error(ErrorKind::InvalidThresholds, "size thresholds must be positive and increasing");
  const double area = box.area();
  if (area < thresholds.small_max_area) return SizeClass::Small;
  if (area < thresholds.medium_max_area) return SizeClass::Medium;
  return SizeClass::Large;
}

CountClass count_class(long n) {
  if (n <= 0) throw Error(ErrorKind::InvalidCount, "object count must be >= 1");
  return n == 1 ? CountClass::Single : CountClass::Multiple;
}

std::vector<RotatedBox> parse_boxes(std::string_view text) {
  std::vector<RotatedBox> boxes;
  const std::string owned(text);
  for (auto it = std::sregex_iterator(owned.begin(), owned.end(), box_pattern());
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const double theta = m[5].matched ? std::stod(m[5].str()) : 0.0;
    const auto box = make_box(std::stod(m[1].str()), std::stod(m[2].str()), std::stod(m[3].str()),
                              std::stod(m[4].str()), theta);
    if (is_valid(box)) boxes.push_back(box);
  }
  return boxes;
}

std::string render_box(const RotatedBox& box) {
  return "[" + format_number(box.x_min) + "," + format_number(box.y_min) + "," +
         format_number(box.x_max) + "," + format_number(box.y_max) + "," +
         format_number(box.theta) + "]";
}

std::string render_boxes(std::span<const RotatedBox> boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += ", ";
    out += render_box(boxes[i]);
  }
  return out;
}

}  // namespace earthforge
