// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace forestseg {

/// 3D point in meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Point3 operator+(const Point3& a, const Point3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Point3 operator-(const Point3& a, const Point3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr bool operator==(const Point3& a, const Point3& b) = default;

  constexpr double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// Per-point label: an individual tree instance, the non-tree class, the
/// non-annotated class, or not labeled yet.
///
/// Stored as the same signed 32-bit code used by every file format:
///   >= 1 tree instance id, 0 non-tree, -1 unlabeled, -2 non-annotated.
class PointLabel {
 public:
  static constexpr std::int32_t kNonTreeCode = 0;
  static constexpr std::int32_t kUnlabeledCode = -1;
  static constexpr std::int32_t kNonAnnotatedCode = -2;

  constexpr PointLabel() = default;

  static constexpr PointLabel tree(std::int32_t id) { return PointLabel(id); }
  static constexpr PointLabel non_tree() { return PointLabel(kNonTreeCode); }
  static constexpr PointLabel unlabeled() { return PointLabel(kUnlabeledCode); }
  static constexpr PointLabel non_annotated() {
    return PointLabel(kNonAnnotatedCode);
  }

  /// True for any code the encoding table defines.
  static constexpr bool valid_code(std::int32_t code) {
    return code >= kNonAnnotatedCode;
  }
  static constexpr PointLabel from_code(std::int32_t code) {
    return PointLabel(code);
  }

  constexpr std::int32_t code() const { return code_; }
  constexpr bool is_tree() const { return code_ >= 1; }
  constexpr bool is_non_tree() const { return code_ == kNonTreeCode; }
  constexpr bool is_unlabeled() const { return code_ == kUnlabeledCode; }
  constexpr bool is_non_annotated() const { return code_ == kNonAnnotatedCode; }

  /// Valid only when is_tree().
  constexpr std::int32_t tree_id() const { return code_; }

  friend constexpr bool operator==(PointLabel a, PointLabel b) = default;

 private:
  explicit constexpr PointLabel(std::int32_t code) : code_(code) {}
  std::int32_t code_ = kUnlabeledCode;
};

/// Plot-level descriptive metadata, one record per dataset.
struct DatasetMeta {
  std::string name;
  std::string country;
  int n_plots = 0;
  int n_trees = 0;
  double annotated_area_ha = 0.0;
  std::string forest_type;
  std::string sensor;
};

/// Point cloud with a 1:1 label channel and optional heights above ground.
struct LabeledCloud {
  std::vector<Point3> points;
  std::vector<PointLabel> labels;
  std::vector<double> heights;  // empty until ground_normalize has run
  DatasetMeta meta;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_heights() const { return heights.size() == points.size(); }
};

/// Axis-aligned 2D box over (x, y).
struct Box2 {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  double area() const { return width() * height(); }

  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool intersects(const Box2& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y &&
           o.min_y <= max_y;
  }
  static Box2 intersection(const Box2& a, const Box2& b) {
    return {std::max(a.min_x, b.min_x), std::max(a.min_y, b.min_y),
            std::min(a.max_x, b.max_x), std::min(a.max_y, b.max_y)};
  }

  friend constexpr bool operator==(const Box2& a, const Box2& b) = default;
};

/// 2D bounding box of a point sequence; zero box for an empty sequence.
Box2 bounding_box_2d(const std::vector<Point3>& points);

}  // namespace forestseg
