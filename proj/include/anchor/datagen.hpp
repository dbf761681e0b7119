#pragma once

// Synthetic data sources: scripted rearrangement videos with parabolic score
// labels, task-agnostic play episodes, and expert demonstrations for the base
// policy. The scripted oracle stands in for the human demonstrator.

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "anchor/flow.hpp"
#include "anchor/rng.hpp"
#include "anchor/sim.hpp"

namespace anchor::data {

inline constexpr int kFramesPerSegment = 40;

struct DemoVideo {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  std::vector<sim::WorldState> states;           // T frames
  std::vector<std::pair<int, int>> segments;     // [first, last] frame per primitive
  std::vector<sim::ActionPrimitive> primitives;  // what the demonstrator did, per segment
  PointFlow flow;                                // all moved objects, raw resolution
  std::vector<double> score_labels;              // T labels

  int length() const { return static_cast<int>(states.size()); }
};

struct PlayRecord {
  sim::Observation pre_observation;
  PointFlow flow;  // kFlowHorizon frames
  sim::ActionPrimitive primitive;
  int moved_id = -1;
};

struct ExpertDemo {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  sim::WorldState start;
  std::vector<std::pair<sim::Observation, sim::ActionPrimitive>> pairs;
  bool success = false;
};

struct UnsolvableScene : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// C_t = alpha - (t / beta)^2 for t = 0..T-1.
std::vector<double> label_scores(int length, double alpha, double beta);

/// One scripted rearrangement step, or nullopt when the scene is already an
/// anchor state for its task.
std::optional<sim::ActionPrimitive> oracle_reduction_step(const sim::WorldState& state);

/// The open-loop task execution from an anchor state.
std::vector<sim::ActionPrimitive> oracle_base_plan(const sim::WorldState& state);

DemoVideo script_demo(const sim::WorldState& scene, Rng& rng, double alpha = 1.0,
                      int frames_per_segment = kFramesPerSegment);

/// Downsampled flow of one demo segment.
PointFlow segment_flow(const DemoVideo& demo, int segment);

struct PlayOptions {
  sim::EnvParams env;
  double rotate_min = 0.35;
  double rotate_max = 1.25;
  double push_min = 0.05;
  double push_max = 0.30;
  int idle_min = 2;
  int idle_max = 6;
};

std::vector<PlayRecord> gen_play(int episodes, Rng& rng, const PlayOptions& opts = {});

std::vector<ExpertDemo> gen_expert(sim::TaskKind task, int demos, Rng& rng,
                                   const sim::EnvParams& env = {});

}  // namespace anchor::data
