#pragma once

// Point flows: F x P tracks of 2D points, plus the extraction, resampling and
// motion-localization steps that turn raw episodes into fixed-horizon flows.

#include <optional>
#include <span>
#include <vector>

#include "anchor/geometry.hpp"
#include "anchor/sim.hpp"

namespace anchor::data {

inline constexpr int kFlowHorizon = 18;
inline constexpr double kMoveThreshold = 0.02;  // net displacement marking a point as moving
inline constexpr double kMinSpeed = 2.5e-4;     // per-frame speed marking a frame as in motion

struct PointFlow {
  int frames = 0;
  int points = 0;
  std::vector<double> data;  // frame-major, then point, then (x, y)

  PointFlow() = default;
  PointFlow(int f, int p) : frames(f), points(p), data(static_cast<std::size_t>(f * p * 2), 0.0) {}

  bool empty() const { return points == 0; }

  Vec2 at(int f, int p) const {
    const auto i = static_cast<std::size_t>((f * points + p) * 2);
    return {data[i], data[i + 1]};
  }
  void set(int f, int p, Vec2 v) {
    const auto i = static_cast<std::size_t>((f * points + p) * 2);
    data[i] = v.x;
    data[i + 1] = v.y;
  }
  std::vector<Vec2> frame(int f) const;
  Vec2 frame_centroid(int f) const;

  friend bool operator==(const PointFlow&, const PointFlow&) = default;
};

/// Ids of objects whose keypoints move more than `threshold` between the
/// first and last state, ascending.
std::vector<int> moving_objects(std::span<const sim::WorldState> states,
                                double threshold = kMoveThreshold);

/// Tracks the ground-truth keypoints of every moving object over all states.
/// Points are grouped contiguously by object. Empty (P = 0) when nothing moves.
PointFlow extract_flow(std::span<const sim::WorldState> states, double threshold = kMoveThreshold);

/// Linear interpolation of every point track onto `horizon` uniformly spaced
/// time fractions; both endpoints are copied exactly.
PointFlow downsample_flow(const PointFlow& flow, int horizon = kFlowHorizon);

/// Frames [first, last] of a flow, inclusive.
PointFlow crop_flow(const PointFlow& flow, int first, int last);

/// Rigid translation of every point.
PointFlow translate_flow(const PointFlow& flow, Vec2 offset);

struct MotionWindow {
  Vec2 box_lo;
  Vec2 box_hi;
  int start = 0;
  int end = 0;
  std::vector<int> points;  // indices of the moving points

  bool box_contains(Vec2 p) const {
    return p.x >= box_lo.x && p.x <= box_hi.x && p.y >= box_lo.y && p.y <= box_hi.y;
  }
};

/// Finds the moving points (net displacement above `move_threshold`), their
/// first-frame bounding box, and the frame window in which any of them moves
/// faster than `min_speed` per frame. nullopt means no motion.
std::optional<MotionWindow> locate_moving(const PointFlow& flow,
                                          double move_threshold = kMoveThreshold,
                                          double min_speed = kMinSpeed);

}  // namespace anchor::data
