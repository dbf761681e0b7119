#pragma once

// Experiment configuration and the per-task training / evaluation pipeline
// shared by the benchmark, the sweep and the acceptance suite.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/datagen.hpp"
#include "anchor/learn.hpp"
#include "anchor/rollout.hpp"
#include "anchor/sim.hpp"

namespace anchor::exp {

struct ExperimentConfig {
  std::vector<sim::TaskKind> tasks{sim::kAllTasks.begin(), sim::kAllTasks.end()};
  std::vector<std::uint64_t> seeds{7};
  int expert_demos = 20;
  std::vector<int> sweep_demos{20, 40, 60, 100};
  int human_demos = 20;
  int play_episodes = 600;
  double sigma_act = 0.0;
  double sigma_obs = 0.0;
  double alpha = 1.0;
  double lambda_cls = 1.0;
  double lambda_reg = 10.0;
  double lambda_ridge = 1e-3;  // scoring model
  double lambda_base = 1e-3;   // base policy
  int gd_iterations = 2000;
  double gd_step = 0.1;
  int flow_k = 1;
  int max_reductions = 4;
  int calibration_scenes = 100;
  int scenarios = 15;
  double ood_fraction = 0.8;
  double nesting_prob = 0.5;
  int theory_samples = 1000;
  int theory_test = 1000;
  int mi_samples = 2000;
  int mi_bins = 8;
  std::string output_dir = "out";

  sim::EnvParams env() const { return {sigma_act, sigma_obs, 0.06}; }
  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
  /// FNV-1a over the canonical serialized form, as 16 hex digits.
  std::string hash() const;
};

/// Everything fitted for one task from one seed.
struct TaskBundle {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  std::vector<data::DemoVideo> human;
  std::vector<data::ExpertDemo> expert;
  rollout::Models models;
};

/// Play data is task-agnostic and shared by all tasks of a seed.
std::vector<data::PlayRecord> make_play(const ExperimentConfig& cfg, std::uint64_t seed);

std::vector<data::DemoVideo> make_human_demos(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                              std::uint64_t seed);

/// Expert demos of one task. Demo i does not depend on `count`, so larger
/// sets extend smaller ones.
std::vector<data::ExpertDemo> make_expert_demos(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                                std::uint64_t seed);

/// Fits score, flow, reduction, base and ablation models and calibrates the
/// threshold. Throws learn::CalibrationError when the score cannot separate.
TaskBundle train_task(sim::TaskKind task, const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::vector<data::PlayRecord>& play, int expert_demos);

/// Held-out anchor (scripted-demo end states) and non-anchor (shifted starts)
/// observations for threshold calibration and score checks.
struct CalibrationSets {
  std::vector<sim::Observation> anchor;
  std::vector<sim::Observation> non_anchor;
};
TaskBundle fit_bundle(sim::TaskKind task, const ExperimentConfig& cfg, std::uint64_t seed,
                      std::vector<data::DemoVideo> human, std::vector<data::ExpertDemo> expert,
                      const std::vector<data::PlayRecord>& play);

CalibrationSets calibration_sets(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                 std::uint64_t seed);

struct Scenario {
  int index = 0;
  sim::Split split = sim::Split::InDist;
  sim::WorldState scene;
};

/// The first round(ood_fraction * count) scenarios are shifted, the rest are
/// in-distribution.
std::vector<Scenario> make_scenarios(sim::TaskKind task, int count, double ood_fraction,
                                     const ExperimentConfig& cfg, std::uint64_t seed);

/// Shifted starts built by translating the objects a human demo rearranged
/// (and whatever they cover) by `shift` in a random direction, kept only if
/// the scene stays in the shifted support of the task.
std::vector<Scenario> make_shifted_scenarios(const TaskBundle& bundle, int count, double shift,
                                             std::uint64_t seed);

enum class Method { Reset, Direct, Naive };
inline constexpr std::array<Method, 3> kAllMethods = {Method::Reset, Method::Direct, Method::Naive};
std::string_view to_string(Method m);
Method parse_method(std::string_view name);

rollout::RolloutTrace run_method(Method method, const TaskBundle& bundle, const Scenario& scenario,
                                 int max_reductions, std::uint64_t seed);

/// Stream tags kept in one place so that every consumer derives the same seeds.
std::uint64_t stream(std::uint64_t seed, std::string_view purpose, std::uint64_t a = 0,
                     std::uint64_t b = 0);

}  // namespace anchor::exp
