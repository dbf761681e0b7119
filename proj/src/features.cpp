#include "anchor/features.hpp"

#include <cmath>
#include <vector>

namespace anchor::learn {

double track_orientation(const sim::Observation& obs, int track) {
  std::vector<Vec2> model;
  std::vector<Vec2> seen;
  for (const auto& kp : obs.keypoints) {
    if (kp.track != track) continue;
    model.push_back(kp.canonical);
    seen.push_back(kp.point);
  }
  return procrustes_angle(model, seen);
}

Vec2 track_centroid(const sim::Observation& obs, int track) {
  std::vector<Vec2> pts;
  for (const auto& kp : obs.keypoints)
    if (kp.track == track) pts.push_back(kp.point);
  return centroid(pts);
}

Eigen::VectorXd featurize(const sim::Observation& obs) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFeatureDim);
  for (int c = 0; c < sim::kNumClasses; ++c) {
    const auto cls = static_cast<sim::ObjectClass>(c);
    Vec2 sum;
    int count = 0;
    int first_track = -1;
    for (const auto& kp : obs.keypoints) {
      if (kp.cls != cls) continue;
      sum += kp.point;
      ++count;
      if (first_track < 0 || kp.track < first_track) first_track = kp.track;
    }
    if (count == 0) continue;
    const int base = c * kClassSlot;
    f[base + 0] = sum.x / count;
    f[base + 1] = sum.y / count;
    f[base + 2] = 1.0;
    const double theta = track_orientation(obs, first_track);
    f[base + 3] = std::cos(theta);
    f[base + 4] = std::sin(theta);
  }
  if (obs.instruction && *obs.instruction >= 0 && *obs.instruction < kInstructionSlots)
    f[sim::kNumClasses * kClassSlot + *obs.instruction] = 1.0;
  f[kFeatureDim - 1] = 1.0;
  return f;
}

}  // namespace anchor::learn
