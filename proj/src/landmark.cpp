#include "gazerace/landmark.hpp"

#include <cmath>
#include <set>
#include <string>

#include "gazerace/errors.hpp"

namespace gazerace {

double distance(Point2 a, Point2 b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

bool is_valid_landmark_index(int index) noexcept {
  return index >= 0 && index < kLandmarkCount;
}

Point2 LandmarkFrame::at(int index) const {
  auto it = points.find(index);
  if (it == points.end()) throw MissingLandmark(index);
  return it->second;
}

std::optional<Point2> LandmarkFrame::find(int index) const {
  auto it = points.find(index);
  if (it == points.end()) return std::nullopt;
  return it->second;
}

namespace {

void check_tuple(const char* name, std::initializer_list<int> indices) {
  std::set<int> seen;
  for (int idx : indices) {
    if (!is_valid_landmark_index(idx)) {
      throw ConfigError(std::string("geometry.") + name + ": landmark index " +
                        std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw ConfigError(std::string("geometry.") + name + ": repeated landmark index " +
                        std::to_string(idx));
    }
  }
}

}  // namespace

void EyeGeometryConfig::validate() const {
  check_tuple("horizontal", {horizontal.e1, horizontal.e2, horizontal.center});
  check_tuple("vertical", {vertical.e1, vertical.e2, vertical.center});
  check_tuple("openness", {openness.from, openness.to, openness.corner1, openness.corner2});
  check_tuple("eyebrow", {eyebrow.from, eyebrow.to, eyebrow.corner1, eyebrow.corner2});
}

double RatioVector::operator[](std::size_t i) const noexcept {
  switch (i) {
    case 0: return h;
    case 1: return v;
    case 2: return open;
    default: return brow;
  }
}

double& RatioVector::operator[](std::size_t i) noexcept {
  switch (i) {
    case 0: return h;
    case 1: return v;
    case 2: return open;
    default: return brow;
  }
}

double ratio(Point2 e1, Point2 e2, Point2 c) {
  return normalized_span(e1, c, e1, e2);
}

double normalized_span(Point2 from, Point2 to, Point2 corner1, Point2 corner2) {
  const double denom = distance(corner1, corner2);
  if (!(denom > kGeometryEpsilon)) {
    throw DegenerateGeometry("edge points coincide (distance " + std::to_string(denom) + ")");
  }
  const double r = distance(from, to) / denom;
  if (!std::isfinite(r)) throw DegenerateGeometry("non-finite landmark ratio");
  return r;
}

RatioVector extract_ratios(const LandmarkFrame& frame, const EyeGeometryConfig& cfg) {
  const auto& hz = cfg.horizontal;
  const auto& vt = cfg.vertical;
  const auto& op = cfg.openness;
  const auto& br = cfg.eyebrow;

  RatioVector out;
  out.h = ratio(frame.at(hz.e1), frame.at(hz.e2), frame.at(hz.center));
  out.v = ratio(frame.at(vt.e1), frame.at(vt.e2), frame.at(vt.center));
  out.open = normalized_span(frame.at(op.from), frame.at(op.to), frame.at(op.corner1),
                             frame.at(op.corner2));
  out.brow = normalized_span(frame.at(br.from), frame.at(br.to), frame.at(br.corner1),
                             frame.at(br.corner2));
  return out;
}

}  // namespace gazerace
