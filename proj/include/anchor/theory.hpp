#pragma once

// Gap, spread and information measurements for one task: raw shifted starts
// (S0), the same starts after the learned or scripted reduction (S_a), and the
// no-op intermediate of the direct policy (S_b = S0).

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "anchor/experiment.hpp"
#include "anchor/gap.hpp"

namespace anchor::theory {

struct TheoryResult {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  std::uint64_t seed = 0;
  int n = 0;
  double tr_sigma0 = 0.0;
  double tr_sigma_a = 0.0;       // learned reduction
  double tr_sigma_oracle = 0.0;  // scripted reduction
  bool anchor_learned = false;
  bool anchor_oracle = false;
  gap::GapReport gap0;
  gap::GapReport gap_a;
  gap::MIReport mi_learned;
  gap::MIReport mi_oracle;
  bool dpi_learned = false;
  bool dpi_oracle = false;
};

/// State after the scripted reduction runs to completion and the scripted
/// task plan executes: the desired goal state for a start.
sim::WorldState goal_state(const sim::WorldState& start);

/// Goal-relevant coordinates: the task object's (x, y, cos theta, sin theta).
Eigen::VectorXd goal_coords(const sim::WorldState& state);

/// Loss of the composed base-policy operator from `start`, evaluated against
/// the goal state of `reference` (the start before any reduction).
double base_loss(const learn::BaseModel& base, const sim::WorldState& start, const sim::WorldState& reference,
                 Rng& rng);

TheoryResult run_theory(const exp::TaskBundle& bundle, const exp::ExperimentConfig& cfg, std::uint64_t seed);

/// Spread-only measurement used by the anchor-condition check.
struct SpreadResult {
  double tr_sigma0 = 0.0;
  double tr_sigma_a = 0.0;
  double tr_sigma_oracle = 0.0;
};
SpreadResult measure_spread(const exp::TaskBundle& bundle, const exp::ExperimentConfig& cfg, int n,
                            std::uint64_t seed);

/// One trial of the designed linear experiment: ridge from observation
/// features of shifted RevealPick starts to the hidden target position,
/// trained on `n_train` i.i.d. draws and tested on `n_test` fresh ones.
gap::GapReport designed_trial(std::uint64_t seed, int n_train, int n_test, double lambda = 1e-3);

/// Feature rows of zero-noise observations of `states`.
Eigen::MatrixXd feature_rows(const std::vector<sim::WorldState>& states);

gap::InitialSampler shifted_sampler(sim::TaskKind task, const exp::ExperimentConfig& cfg);

}  // namespace anchor::theory
