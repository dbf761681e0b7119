#include "anchor/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace anchor::exp {

std::uint64_t stream(std::uint64_t seed, std::string_view purpose, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : purpose) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return splitmix64(splitmix64(splitmix64(seed ^ h) ^ a) ^ b);
}

std::vector<data::PlayRecord> make_play(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng(stream(seed, "play"));
  data::PlayOptions opts;
  opts.env = cfg.env();
  return data::gen_play(cfg.play_episodes, rng, opts);
}

std::vector<data::DemoVideo> make_human_demos(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                              std::uint64_t seed) {
  std::vector<data::DemoVideo> demos;
  demos.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(stream(seed, "human", static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(i)));
    const auto scene = sim::sample_scenario(task, sim::Split::OOD, rng, cfg.env(), cfg.nesting_prob);
    demos.push_back(data::script_demo(scene, rng, cfg.alpha));
  }
  return demos;
}

CalibrationSets calibration_sets(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                 std::uint64_t seed) {
  CalibrationSets sets;
  for (int i = 0; i < count; ++i) {
    Rng rng(stream(seed, "calibration", static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(i)));
    const auto scene = sim::sample_scenario(task, sim::Split::OOD, rng, cfg.env(), cfg.nesting_prob);
    const auto demo = data::script_demo(scene, rng, cfg.alpha);
    // Every state the scripted demonstrator still acts on is non-anchor,
    // including the intermediate ones of multi-step rearrangements.
    for (const auto& [first, last] : demo.segments)
      sets.non_anchor.push_back(sim::observe(demo.states[static_cast<std::size_t>(first)], rng));
    sets.anchor.push_back(sim::observe(demo.states.back(), rng));
  }
  return sets;
}

std::vector<data::ExpertDemo> make_expert_demos(sim::TaskKind task, int count, const ExperimentConfig& cfg,
                                                std::uint64_t seed) {
  Rng rng(stream(seed, "expert", static_cast<std::uint64_t>(task)));
  return data::gen_expert(task, count, rng, cfg.env());
}

TaskBundle train_task(sim::TaskKind task, const ExperimentConfig& cfg, std::uint64_t seed,
                      const std::vector<data::PlayRecord>& play, int expert_demos) {
  return fit_bundle(task, cfg, seed, make_human_demos(task, cfg.human_demos, cfg, seed),
                    make_expert_demos(task, expert_demos, cfg, seed), play);
}

TaskBundle fit_bundle(sim::TaskKind task, const ExperimentConfig& cfg, std::uint64_t seed,
                      std::vector<data::DemoVideo> human, std::vector<data::ExpertDemo> expert,
                      const std::vector<data::PlayRecord>& play) {
  TaskBundle b;
  b.task = task;
  b.human = std::move(human);
  b.expert = std::move(expert);

  learn::ReductionOptions ro;
  ro.lambda_cls = cfg.lambda_cls;
  ro.lambda_reg = cfg.lambda_reg;
  ro.step = cfg.gd_step;
  ro.iterations = cfg.gd_iterations;

  auto& m = b.models;
  m.score = learn::fit_score(b.human, cfg.lambda_ridge);
  m.flow = learn::fit_flow(b.human, cfg.flow_k);
  m.reduction = learn::fit_reduction(play, ro);
  m.base = learn::fit_base(b.expert, cfg.lambda_base);
  m.naive = learn::fit_naive(b.human, play);
  const auto sets = calibration_sets(task, cfg.calibration_scenes, cfg, seed);
  m.threshold = learn::calibrate_threshold(m.score, sets.anchor, sets.non_anchor);
  return b;
}

std::vector<Scenario> make_scenarios(sim::TaskKind task, int count, double ood_fraction,
                                     const ExperimentConfig& cfg, std::uint64_t seed) {
  const int n_ood = static_cast<int>(std::lround(ood_fraction * count));
  std::vector<Scenario> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(stream(seed, "scenario", static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(i)));
    const auto split = i < n_ood ? sim::Split::OOD : sim::Split::InDist;
    out.push_back({i, split, sim::sample_scenario(task, split, rng, cfg.env(), cfg.nesting_prob)});
  }
  return out;
}

namespace {

// Objects the demonstrator moved, plus everything stacked under them, so the
// shift perturbs exactly the part of the scene the rearrangement acts on.
std::vector<int> shifted_objects(const data::DemoVideo& demo) {
  const auto& start = demo.states.front();
  std::vector<int> ids = data::moving_objects(demo.states);
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (const auto& [covered, coverer] : start.covered_by)
      if (coverer == ids[i] && std::find(ids.begin(), ids.end(), covered) == ids.end())
        ids.push_back(covered);
  return ids;
}

}  // namespace

std::vector<Scenario> make_shifted_scenarios(const TaskBundle& bundle, int count, double shift,
                                             std::uint64_t seed) {
  constexpr int kMaxTries = 10000;
  std::vector<Scenario> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(stream(seed, "shifted", static_cast<std::uint64_t>(bundle.task), static_cast<std::uint64_t>(i)));
    bool done = false;
    for (int attempt = 0; attempt < kMaxTries && !done; ++attempt) {
      const auto& source = bundle.human[static_cast<std::size_t>(rng.index(static_cast<int>(bundle.human.size())))];
      sim::WorldState s = source.states.front();
      const double phi = rng.uniform(-std::numbers::pi, std::numbers::pi);
      const Vec2 offset{shift * std::cos(phi), shift * std::sin(phi)};
      for (const int id : shifted_objects(source)) {
        s.object(id).pose.x += offset.x;
        s.object(id).pose.y += offset.y;
      }
      if (s.goal.other_id >= 0) s.goal.other_start = s.object(s.goal.other_id).pose.position();
      sim::recompute_cover(s);
      if (!sim::in_ood_support(s)) continue;
      out.push_back({i, sim::Split::OOD, std::move(s)});
      done = true;
    }
    if (!done) throw std::runtime_error("could not place a shifted scenario inside the shifted support");
  }
  return out;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Reset: return "reset";
    case Method::Direct: return "direct";
    case Method::Naive: return "naive";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (const Method m : kAllMethods)
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

rollout::RolloutTrace run_method(Method method, const TaskBundle& bundle, const Scenario& scenario,
                                 int max_reductions, std::uint64_t seed) {
  Rng rng(stream(seed, "rollout", static_cast<std::uint64_t>(bundle.task) * 1000003ULL +
                                      static_cast<std::uint64_t>(scenario.index),
                 static_cast<std::uint64_t>(method)));
  switch (method) {
    case Method::Reset: return rollout::reset_rollout(bundle.models, scenario.scene, max_reductions, rng);
    case Method::Direct: return rollout::direct_rollout(bundle.models.base, scenario.scene, rng);
    case Method::Naive: return rollout::naive_rollout(bundle.models, scenario.scene, max_reductions, rng);
  }
  throw std::logic_error("unreachable");
}

}  // namespace anchor::exp
