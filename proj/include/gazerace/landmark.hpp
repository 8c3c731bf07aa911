#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>

namespace gazerace {

/// Face-mesh topology size: 468 mesh points plus the 10 refined iris points.
inline constexpr int kLandmarkCount = 478;

/// Edge-pair lengths at or below this are treated as collapsed.
inline constexpr double kGeometryEpsilon = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b) noexcept;

bool is_valid_landmark_index(int index) noexcept;

/// One timestamped set of face-mesh points; may hold a subset of the topology.
struct LandmarkFrame {
  std::int64_t timestamp_us = 0;
  std::map<int, Point2> points;

  /// Throws MissingLandmark when absent.
  Point2 at(int index) const;
  std::optional<Point2> find(int index) const;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

/// Landmark indices feeding each ratio. Defaults name the subject's right eye
/// in the MediaPipe refined face-mesh topology.
struct EyeGeometryConfig {
  struct Triple {
    int e1;
    int e2;
    int center;
    friend bool operator==(const Triple&, const Triple&) = default;
  };
  /// `from`/`to` span the measured distance; corners give the normalizer.
  struct Quad {
    int from;
    int to;
    int corner1;
    int corner2;
    friend bool operator==(const Quad&, const Quad&) = default;
  };

  Triple horizontal{33, 133, 468};
  Triple vertical{159, 145, 468};
  Quad openness{159, 145, 33, 133};
  Quad eyebrow{105, 159, 33, 133};

  /// Throws ConfigError on out-of-range or repeated indices within a tuple.
  void validate() const;

  friend bool operator==(const EyeGeometryConfig&, const EyeGeometryConfig&) = default;
};

/// Per-frame feature vector. Component order h, v, open, brow is also the
/// serialization order.
struct RatioVector {
  double h = 0.0;
  double v = 0.0;
  double open = 0.0;
  double brow = 0.0;

  static constexpr std::size_t kSize = 4;

  double operator[](std::size_t i) const noexcept;
  double& operator[](std::size_t i) noexcept;
  std::array<double, kSize> to_array() const noexcept { return {h, v, open, brow}; }
  static RatioVector from_array(const std::array<double, kSize>& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }

  friend bool operator==(const RatioVector&, const RatioVector&) = default;
};

/// Distance from the first edge point to the center point, over the
/// edge-to-edge distance. Throws DegenerateGeometry when the edge pair has
/// collapsed.
double ratio(Point2 e1, Point2 e2, Point2 c);

/// |from - to| normalized by |corner1 - corner2|; the same ratio form with a
/// separate normalizing pair.
double normalized_span(Point2 from, Point2 to, Point2 corner1, Point2 corner2);

RatioVector extract_ratios(const LandmarkFrame& frame, const EyeGeometryConfig& cfg);

}  // namespace gazerace
