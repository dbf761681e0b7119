#pragma once

// Execution loop: score the scene, restructure it with flow-guided primitives
// until the score drops below the threshold, then run the base policy
// open-loop. Also the direct baseline and the observation-to-action ablation.

#include <functional>
#include <string_view>
#include <vector>

#include "anchor/flow.hpp"
#include "anchor/learn.hpp"
#include "anchor/rng.hpp"
#include "anchor/sim.hpp"

namespace anchor::rollout {

enum class Outcome { Success, Failure, BudgetExceeded, NoProgress };

std::string_view to_string(Outcome outcome);

struct ReductionStep {
  sim::Observation observation;
  data::PointFlow flow;  // empty for the ablation, which skips flow generation
  sim::ActionPrimitive action;
  double score_before = 0.0;
  double score_after = 0.0;
};

struct BaseStep {
  sim::Observation observation;
  sim::ActionPrimitive action;
};

struct RolloutTrace {
  std::vector<ReductionStep> reduction_steps;
  std::vector<BaseStep> base_steps;
  Outcome outcome = Outcome::Failure;
  sim::WorldState final_state;
};

struct LoopParams {
  double threshold = 0.5;
  int max_reductions = 4;
  double progress_eps = 0.01;
};

// Components see the true state so that scripted substitutes can be plugged
// in; the learned ones only read the observation.
struct Components {
  std::function<double(const sim::Observation&)> score;
  std::function<data::PointFlow(const sim::WorldState&, const sim::Observation&)> flow;
  std::function<sim::ActionPrimitive(const sim::WorldState&, const data::PointFlow&,
                                     const sim::Observation&)>
      reduce;
  std::function<std::vector<sim::ActionPrimitive>(const sim::WorldState&, const sim::Observation&)> base;
};

struct Models {
  learn::ScoreModel score;
  learn::FlowGenerator flow;
  learn::ReductionModel reduction;
  learn::BaseModel base;
  learn::NaiveModel naive;
  double threshold = 0.5;
};

/// Runs the score / reduce / re-score loop and then the base phase. A missing
/// `flow` component is allowed; `reduce` then receives an empty flow.
RolloutTrace run_loop(const Components& parts, const LoopParams& params, const sim::WorldState& scene,
                      Rng& rng);

Components learned_components(const Models& models);
Components naive_components(const Models& models);

/// Scripted flow and ground-truth primitive, learned score and base.
Components oracle_components(const Models& models);

RolloutTrace reset_rollout(const Models& models, const sim::WorldState& scene, int max_reductions,
                           Rng& rng);
RolloutTrace direct_rollout(const learn::BaseModel& base, const sim::WorldState& scene, Rng& rng);
RolloutTrace naive_rollout(const Models& models, const sim::WorldState& scene, int max_reductions,
                           Rng& rng);

/// Flow of the scripted reduction step from `state` (empty when anchored).
data::PointFlow oracle_flow(const sim::WorldState& state);

}  // namespace anchor::rollout
