#include "scripted.hpp"

#include <cmath>
#include <stdexcept>

namespace gazerace::testing {

namespace {

constexpr double kWidth = 0.1;
constexpr Point2 kInner{0.40, 0.50};  // index 33
constexpr Point2 kOuter{0.50, 0.50};  // index 133
constexpr double kLidX = 0.45;
constexpr double kRadius = 0.06;

}  // namespace

RatioVector pose_ratios(Action a) {
  const double s = 1.0 / std::sqrt(2.0);
  std::array<double, 4> d{};
  switch (a) {
    case Action::Up: d = {0, -1, 0, 0}; break;
    case Action::Down: d = {0, 1, 0, 0}; break;
    case Action::Left: d = {-1, 0, 0, 0}; break;
    case Action::Right: d = {1, 0, 0, 0}; break;
    case Action::FarLeft: d = {-s, 0, 0, -s}; break;
    case Action::FarRight: d = {s, 0, 0, -s}; break;
    case Action::Wide: d = {0, 0, 1, 0}; break;
    case Action::Squint: d = {0, 0, -1, 0}; break;
    case Action::Center: break;
    case Action::Raise: d = {0, 0, 0, 1}; break;
  }
  const std::array<double, 4> center{0.5, 0.5, 0.4, 0.6};
  RatioVector r;
  for (std::size_t i = 0; i < 4; ++i) r[i] = center[i] + kRadius * d[i];
  return r;
}

LandmarkFrame pose_frame(Action a, std::int64_t t_us) {
  const auto r = pose_ratios(a);
  const double gap = r.open * kWidth;
  const Point2 upper{kLidX, kInner.y - gap / 2};
  const Point2 lower{kLidX, kInner.y + gap / 2};
  const Point2 brow{kLidX, upper.y - r.brow * kWidth};

  // Iris: |iris - inner| = h*W and |iris - upper| = v*gap.
  const double r1 = r.h * kWidth;
  const double r2 = r.v * gap;
  const double dx = upper.x - kInner.x, dy = upper.y - kInner.y;
  const double d = std::hypot(dx, dy);
  const double along = (r1 * r1 - r2 * r2 + d * d) / (2 * d);
  const double off2 = r1 * r1 - along * along;
  if (off2 < 0) throw std::logic_error("pose circles do not intersect");
  const double off = std::sqrt(off2);
  const Point2 iris{kInner.x + (along * dx - off * dy) / d, kInner.y + (along * dy + off * dx) / d};

  LandmarkFrame f;
  f.timestamp_us = t_us;
  f.points = {{33, kInner}, {133, kOuter}, {159, upper}, {145, lower}, {105, brow}, {468, iris}};
  return f;
}

CalibrationProfile pose_profile(std::size_t per_action) {
  std::vector<CalibrationSample> samples;
  const EyeGeometryConfig geo;
  for (Action a : kAllActions) {
    const auto ratios = extract_ratios(pose_frame(a, 0), geo);
    for (std::size_t i = 0; i < per_action; ++i) samples.push_back({a, ratios});
  }
  return calibrate(samples);
}

std::vector<Segment> scripted_route() {
  // 50 frames/s. Linear speed 1 m/s, climb 0.5 m/s, yaw 0.8 rad/s; 98 frames
  // of yaw is within 0.2 degrees of a quarter turn.
  const int hold = 100;
  const int quarter_turn = 98;
  using A = Action;
  return {
      {A::Center, 20},   {A::Raise, 10},    {A::Center, 150},    // arm, take off, settle
      {A::Wide, 500},    {A::Center, hold},                      // G1
      {A::Up, 100},      {A::Center, hold},
      {A::Wide, 400},    {A::Center, hold},                      // G2
      {A::FarRight, quarter_turn}, {A::Center, hold},
      {A::Wide, 500},    {A::Center, hold},                      // G3
      {A::Down, 100},    {A::Center, hold},
      {A::FarRight, quarter_turn}, {A::Center, hold},
      {A::Wide, 400},    {A::Center, hold},                      // G4
      {A::Right, 300},   {A::Center, hold},                      // G5
      {A::Wide, 300},    {A::Center, hold},                      // G6
      {A::FarRight, quarter_turn}, {A::Center, hold},
      {A::Wide, 200},    {A::Center, hold},                      // G7
      {A::Raise, 10},    {A::Center, 300},                       // land
  };
}

std::vector<LandmarkFrame> frames_for(const std::vector<Segment>& route, std::int64_t frame_us) {
  std::vector<LandmarkFrame> out;
  std::int64_t t = frame_us;
  for (const auto& seg : route) {
    for (int i = 0; i < seg.frames; ++i, t += frame_us) out.push_back(pose_frame(seg.action, t));
  }
  return out;
}

}  // namespace gazerace::testing
