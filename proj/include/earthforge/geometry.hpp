// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "earthforge/error.hpp"

namespace earthforge {

/// Axis-aligned extents on the [0,100] frame, rotated by `theta` degrees
/// counterclockwise about the extent centre. Counterclockwise is the
/// standard orientation of the (x, y) plane: a point at +x moves towards +y.
template <typename Scalar>
struct BasicRotatedBox {
  using Point = Eigen::Matrix<Scalar, 2, 1>;

  Scalar x_min = 0;
  Scalar y_min = 0;
  Scalar x_max = 0;
  Scalar y_max = 0;
  Scalar theta = 0;

  Scalar width() const noexcept { return x_max - x_min; }
  Scalar height() const noexcept { return y_max - y_min; }
  Scalar area() const noexcept { return width() * height(); }
  Point center() const noexcept { return {(x_min + x_max) / 2, (y_min + y_max) / 2}; }

  friend bool operator==(const BasicRotatedBox&, const BasicRotatedBox&) = default;
};

using RotatedBox = BasicRotatedBox<double>;

/// Wraps an angle in degrees into (-180, 180].
template <typename Scalar>
Scalar wrap_degrees(Scalar theta) {
  Scalar t = std::fmod(theta, Scalar(360));
  if (t <= Scalar(-180)) t += Scalar(360);
  if (t > Scalar(180)) t -= Scalar(360);
  return t;
}

/// Orders corners so that x_min <= x_max and y_min <= y_max; wraps theta.
template <typename Scalar>
BasicRotatedBox<Scalar> make_box(Scalar x1, Scalar y1, Scalar x2, Scalar y2, Scalar theta = 0) {
  return {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2),
          wrap_degrees(theta)};
}

/// Ordered extents, coordinates inside [0,100], theta in (-180,180].
template <typename Scalar>
bool is_valid(const BasicRotatedBox<Scalar>& b) noexcept {
  const auto in_frame = [](Scalar v) { return v >= Scalar(0) && v <= Scalar(100); };
  return b.x_min <= b.x_max && b.y_min <= b.y_max && in_frame(b.x_min) && in_frame(b.x_max) &&
         in_frame(b.y_min) && in_frame(b.y_max) && b.theta > Scalar(-180) &&
         b.theta <= Scalar(180);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation_degrees(Scalar theta) {
  const Scalar rad = theta * std::numbers::pi_v<Scalar> / Scalar(180);
  const Scalar c = std::cos(rad);
  const Scalar s = std::sin(rad);
  Eigen::Matrix<Scalar, 2, 2> m;
  m << c, -s, s, c;
  return m;
}

/// Counterclockwise corners starting at the rotated (x_min, y_min):
/// (x_min,y_min), (x_max,y_min), (x_max,y_max), (x_min,y_max).
template <typename Scalar>
std::array<typename BasicRotatedBox<Scalar>::Point, 4> corners(const BasicRotatedBox<Scalar>& b) {
  using Point = typename BasicRotatedBox<Scalar>::Point;
  const Point c = b.center();
  const auto rot = rotation_degrees(b.theta);
  const std::array<Point, 4> axis = {Point(b.x_min, b.y_min), Point(b.x_max, b.y_min),
                                     Point(b.x_max, b.y_max), Point(b.x_min, b.y_max)};
  std::array<Point, 4> out;
  for (std::size_t i = 0; i < 4; ++i) out[i] = c + rot * (axis[i] - c);
  return out;
}

/// Shoelace area, positive for counterclockwise polygons.
template <typename Scalar>
Scalar signed_area(std::span<const Eigen::Matrix<Scalar, 2, 1>> poly) {
  Scalar twice = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return twice / 2;
}

/// Clips `subject` against every edge half-plane of the counterclockwise
/// convex polygon `clip` (Sutherland-Hodgman).
template <typename Scalar>
std::vector<Eigen::Matrix<Scalar, 2, 1>> clip_convex(
    std::vector<Eigen::Matrix<Scalar, 2, 1>> subject,
    std::span<const Eigen::Matrix<Scalar, 2, 1>> clip) {
  using Point = Eigen::Matrix<Scalar, 2, 1>;
  const auto side = [](const Point& a, const Point& b, const Point& p) {
    const Point e = b - a;
    const Point d = p - a;
    return e.x() * d.y() - e.y() * d.x();
  };
  for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
    const Point& a = clip[i];
    const Point& b = clip[(i + 1) % clip.size()];
    std::vector<Point> next;
    next.reserve(subject.size() + 2);
    for (std::size_t j = 0; j < subject.size(); ++j) {
      const Point& p = subject[j];
      const Point& q = subject[(j + 1) % subject.size()];
      const Scalar sp = side(a, b, p);
      const Scalar sq = side(a, b, q);
      if (sp >= 0) next.push_back(p);
      if ((sp >= 0) != (sq >= 0)) {
        const Scalar t = sp / (sp - sq);
        next.push_back(p + t * (q - p));
      }
    }
    subject = std::move(next);
  }
  return subject;
}

template <typename Scalar>
Scalar intersection_area(const BasicRotatedBox<Scalar>& a, const BasicRotatedBox<Scalar>& b) {
  using Point = typename BasicRotatedBox<Scalar>::Point;
  if (a.area() <= 0 || b.area() <= 0) return 0;
  const auto ca = corners(a);
  const auto cb = corners(b);
  const auto poly = clip_convex<Scalar>(std::vector<Point>(ca.begin(), ca.end()),
                                        std::span<const Point>(cb));
  if (poly.size() < 3) return 0;
  const Scalar area = signed_area<Scalar>(poly);
  return std::clamp(area, Scalar(0), std::min(a.area(), b.area()));
}

/// Exact IoU of two rotated rectangles; zero-area boxes give 0.
template <typename Scalar>
Scalar rotated_iou(const BasicRotatedBox<Scalar>& a, const BasicRotatedBox<Scalar>& b) {
  const Scalar inter = intersection_area(a, b);
  const Scalar uni = a.area() + b.area() - inter;
  if (!(uni > 0)) return 0;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

/// Box rotated by `degrees` about `pivot`: the centre moves, extents stay.
template <typename Scalar>
BasicRotatedBox<Scalar> rotate_about(const BasicRotatedBox<Scalar>& b,
                                     const typename BasicRotatedBox<Scalar>::Point& pivot,
                                     Scalar degrees) {
  const typename BasicRotatedBox<Scalar>::Point c = pivot + rotation_degrees(degrees) * (b.center() - pivot);
  const Scalar hw = b.width() / 2;
  const Scalar hh = b.height() / 2;
  return {c.x() - hw, c.y() - hh, c.x() + hw, c.y() + hh, wrap_degrees(b.theta + degrees)};
}

enum class SizeClass { Small, Medium, Large };
enum class CountClass { Single, Multiple };

std::string_view name(SizeClass s) noexcept;
std::string_view name(CountClass c) noexcept;

/// Area bounds on the [0,100]^2 frame. Defaults are the 32^2 / 96^2 pixel
/// bounds of a 448-pixel image rescaled to the frame.
struct SizeThresholds {
  double small_max_area = 32.0 * 32.0 * (100.0 / 448.0) * (100.0 / 448.0);
  double medium_max_area = 96.0 * 96.0 * (100.0 / 448.0) * (100.0 / 448.0);
};

/// By unrotated area: small < small_max <= medium < medium_max <= large.
SizeClass size_class(const RotatedBox& box, const SizeThresholds& thresholds = {});
CountClass count_class(long n);

/// Every "[a,b,c,d,e]" or "[a,b,c,d]" in `text`. Corners are reordered,
/// theta wrapped; boxes with a coordinate outside [0,100] are skipped.
std::vector<RotatedBox> parse_boxes(std::string_view text);

/// "[x1,y1,x2,y2,theta]": integers when integral, otherwise two decimals.
std::string render_box(const RotatedBox& box);
std::string render_boxes(std::span<const RotatedBox> boxes);

}  // namespace earthforge
