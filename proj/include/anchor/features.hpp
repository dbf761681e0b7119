#pragma once

#include <Eigen/Core>

#include "anchor/sim.hpp"

namespace anchor::learn {

// Per object class, in enum order: mean keypoint (x, y), visibility flag,
// orientation (cos, sin). Then a two-slot instruction one-hot and a bias 1.
inline constexpr int kClassSlot = 5;
inline constexpr int kInstructionSlots = 2;
inline constexpr int kFeatureDim = sim::kNumClasses * kClassSlot + kInstructionSlots + 1;

Eigen::VectorXd featurize(const sim::Observation& obs);

/// Orientation of one tracked object, by Procrustes alignment of its observed
/// keypoints against the model-frame constellation.
double track_orientation(const sim::Observation& obs, int track);

Vec2 track_centroid(const sim::Observation& obs, int track);

}  // namespace anchor::learn
