#include "anchor/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace anchor::data {

std::vector<Vec2> PointFlow::frame(int f) const {
  std::vector<Vec2> out(static_cast<std::size_t>(points));
  for (int p = 0; p < points; ++p) out[static_cast<std::size_t>(p)] = at(f, p);
  return out;
}

Vec2 PointFlow::frame_centroid(int f) const {
  const auto pts = frame(f);
  return centroid(pts);
}

std::vector<int> moving_objects(std::span<const sim::WorldState> states, double threshold) {
  std::vector<int> ids;
  if (states.size() < 2) return ids;
  const auto& first = states.front();
  const auto& last = states.back();
  for (std::size_t i = 0; i < first.objects.size(); ++i) {
    const auto a = sim::world_keypoints(first.objects[i]);
    const auto b = sim::world_keypoints(last.objects[i]);
    double moved = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) moved = std::max(moved, distance(a[k], b[k]));
    if (moved > threshold) ids.push_back(first.objects[i].spec.id);
  }
  return ids;
}

PointFlow extract_flow(std::span<const sim::WorldState> states, double threshold) {
  if (states.size() < 2) throw std::invalid_argument("extract_flow needs at least two states");
  const auto ids = moving_objects(states, threshold);
  const int frames = static_cast<int>(states.size());
  const int points = static_cast<int>(ids.size()) * sim::kKeypointsPerObject;
  PointFlow flow(frames, points);
  for (int f = 0; f < frames; ++f) {
    int p = 0;
    for (int id : ids) {
      for (const Vec2& kp : sim::world_keypoints(states[static_cast<std::size_t>(f)].object(id)))
        flow.set(f, p++, kp);
    }
  }
  return flow;
}

PointFlow downsample_flow(const PointFlow& flow, int horizon) {
  if (flow.frames < 2) throw std::invalid_argument("downsample_flow needs at least two frames");
  if (flow.frames == horizon) return flow;
  PointFlow out(horizon, flow.points);
  const int last = flow.frames - 1;
  for (int k = 0; k < horizon; ++k) {
    if (k == horizon - 1) {
      for (int p = 0; p < flow.points; ++p) out.set(k, p, flow.at(last, p));
      continue;
    }
    const double u = static_cast<double>(k) * last / (horizon - 1);
    const int i0 = std::min(static_cast<int>(std::floor(u)), last);
    const double w = u - i0;
    for (int p = 0; p < flow.points; ++p) {
      if (w == 0.0 || i0 == last) {
        out.set(k, p, flow.at(i0, p));
      } else {
        out.set(k, p, lerp(flow.at(i0, p), flow.at(i0 + 1, p), w));
      }
    }
  }
  return out;
}

PointFlow crop_flow(const PointFlow& flow, int first, int last) {
  if (first < 0 || last >= flow.frames || first > last)
    throw std::invalid_argument("crop_flow: bad frame range");
  PointFlow out(last - first + 1, flow.points);
  for (int f = first; f <= last; ++f)
    for (int p = 0; p < flow.points; ++p) out.set(f - first, p, flow.at(f, p));
  return out;
}

PointFlow translate_flow(const PointFlow& flow, Vec2 offset) {
  PointFlow out = flow;
  for (int f = 0; f < flow.frames; ++f)
    for (int p = 0; p < flow.points; ++p) out.set(f, p, flow.at(f, p) + offset);
  return out;
}

std::optional<MotionWindow> locate_moving(const PointFlow& flow, double move_threshold,
                                          double min_speed) {
  if (flow.points < 1 || flow.frames < 2) return std::nullopt;
  MotionWindow w;
  const int last = flow.frames - 1;
  for (int p = 0; p < flow.points; ++p)
    if (distance(flow.at(0, p), flow.at(last, p)) > move_threshold) w.points.push_back(p);
  if (w.points.empty()) return std::nullopt;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  w.box_lo = {kInf, kInf};
  w.box_hi = {-kInf, -kInf};
  for (int p : w.points) {
    const Vec2 q = flow.at(0, p);
    w.box_lo = {std::min(w.box_lo.x, q.x), std::min(w.box_lo.y, q.y)};
    w.box_hi = {std::max(w.box_hi.x, q.x), std::max(w.box_hi.y, q.y)};
  }

  auto moving_between = [&](int f) {  // motion from frame f to f + 1
    for (int p : w.points)
      if (distance(flow.at(f, p), flow.at(f + 1, p)) > min_speed) return true;
    return false;
  };
  int start = -1;
  int end = -1;
  for (int f = 0; f < last; ++f) {
    if (moving_between(f)) {
      if (start < 0) start = f;
      end = f + 1;
    }
  }
  if (start < 0) return std::nullopt;
  w.start = start;
  w.end = end;
  return w;
}

}  // namespace anchor::data
