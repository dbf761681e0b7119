#include "anchor/datagen.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace anchor::data {

namespace {

constexpr int kMaxOracleSteps = 8;
constexpr double kRotateTolerance = 0.1;

int top_coverer(const sim::WorldState& state, int id) {
  int c = state.covered_by.at(id);
  while (state.is_covered(c)) c = state.covered_by.at(c);
  return c;
}

Vec2 base_destination(const sim::WorldState& state) {
  if (state.goal.task == sim::TaskKind::PickPlace)
    return state.object(state.goal.container_id).pose.position();
  return state.goal.zone;
}

Vec2 random_destination(Vec2 from, Rng& rng) {
  for (;;) {
    const Vec2 to{rng.uniform(0.08, 0.92), rng.uniform(0.08, 0.88)};
    if (distance(from, to) >= 0.05) return to;
  }
}

}  // namespace

std::vector<double> label_scores(int length, double alpha, double beta) {
  if (length < 1) throw std::invalid_argument("label_scores: length must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("label_scores: beta must be > 0");
  std::vector<double> labels(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    const double r = t / beta;
    labels[static_cast<std::size_t>(t)] = alpha - r * r;
  }
  return labels;
}

std::optional<sim::ActionPrimitive> oracle_reduction_step(const sim::WorldState& state) {
  const auto& goal = state.goal;
  const auto& L = sim::layout(goal.task);
  switch (goal.task) {
    case sim::TaskKind::PickPlace: {
      const Vec2 bowl = state.object(goal.container_id).pose.position();
      if (distance(bowl, L.container_anchor) <= L.container_anchor_tol) return std::nullopt;
      return sim::ActionPrimitive::push_pull(bowl, L.container_anchor);
    }
    case sim::TaskKind::RevealPick:
    case sim::TaskKind::MultiTask: {
      if (!state.is_covered(goal.target_id)) return std::nullopt;
      const int c = top_coverer(state, goal.target_id);
      const auto spot = L.parking.find(c);
      if (spot == L.parking.end())
        throw UnsolvableScene("no clear zone for covering object " + std::to_string(c));
      return sim::ActionPrimitive::pick_place(state.object(c).pose.position(), spot->second);
    }
    case sim::TaskKind::RotatePlace: {
      const auto& tool = state.object(goal.target_id);
      const double center = 0.5 * (goal.theta_lo + goal.theta_hi);
      const double off = normalize_angle(tool.pose.theta - center);
      if (std::abs(off) <= kRotateTolerance) return std::nullopt;
      return sim::ActionPrimitive::rotate(tool.pose.position(), -off);
    }
  }
  return std::nullopt;
}

std::vector<sim::ActionPrimitive> oracle_base_plan(const sim::WorldState& state) {
  const Vec2 from = state.object(state.goal.target_id).pose.position();
  return {sim::ActionPrimitive::pick_place(from, base_destination(state))};
}

DemoVideo script_demo(const sim::WorldState& scene, Rng& rng, double alpha,
                      int frames_per_segment) {
  DemoVideo demo;
  demo.task = scene.goal.task;
  demo.states.push_back(scene);
  sim::WorldState current = scene;
  for (int step = 0;; ++step) {
    const auto action = oracle_reduction_step(current);
    if (!action) break;
    if (step == kMaxOracleSteps) throw UnsolvableScene("scripted demo exceeded its step budget");
    auto result = sim::apply_primitive(current, *action, rng);
    if (!result.success)
      throw UnsolvableScene("scripted primitive found no eligible object");
    const int first = demo.length() - 1;
    auto frames = sim::interpolate_motion(current, result, action->cls, frames_per_segment);
    for (auto& f : frames) demo.states.push_back(std::move(f));
    demo.segments.emplace_back(first, demo.length() - 1);
    demo.primitives.push_back(*action);
    current = std::move(result.state);
  }
  const int T = demo.length();
  demo.score_labels = T == 1 ? std::vector<double>{alpha} : label_scores(T, alpha, T - 1);
  if (T >= 2) demo.flow = extract_flow(demo.states);
  return demo;
}

PointFlow segment_flow(const DemoVideo& demo, int segment) {
  const auto [first, last] = demo.segments.at(static_cast<std::size_t>(segment));
  std::span<const sim::WorldState> span(demo.states.data() + first,
                                        static_cast<std::size_t>(last - first + 1));
  PointFlow raw = extract_flow(span);
  if (raw.empty()) return raw;
  return downsample_flow(raw);
}

std::vector<PlayRecord> gen_play(int episodes, Rng& rng, const PlayOptions& opts) {
  if (episodes < 1) throw std::invalid_argument("gen_play: episodes must be >= 1");
  const Rng base = rng.derive(rng.engine()());
  std::vector<PlayRecord> records(static_cast<std::size_t>(episodes));

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < episodes; ++i) {
    Rng er = base.derive(static_cast<std::uint64_t>(i));
    for (;;) {
      const auto task = sim::kAllTasks[static_cast<std::size_t>(er.index(4))];
      const auto split = er.bernoulli(0.5) ? sim::Split::OOD : sim::Split::InDist;
      const sim::WorldState scene = sim::sample_scenario(task, split, er, opts.env);
      const auto cls = static_cast<sim::PrimitiveClass>(er.index(sim::kNumPrimitiveClasses));

      std::vector<int> eligible;
      for (const auto& o : scene.objects) {
        if (!o.spec.movable || scene.is_covered(o.spec.id)) continue;
        if (cls == sim::PrimitiveClass::PickPlace && !o.spec.graspable) continue;
        eligible.push_back(o.spec.id);
      }
      if (eligible.empty()) continue;
      const int id = eligible[static_cast<std::size_t>(er.index(static_cast<int>(eligible.size())))];
      const Vec2 from = scene.object(id).pose.position();

      sim::ActionPrimitive action;
      if (cls == sim::PrimitiveClass::PickPlace) {
        action = sim::ActionPrimitive::pick_place(from, random_destination(from, er));
      } else if (cls == sim::PrimitiveClass::PushPull) {
        const double mag = er.uniform(opts.push_min, opts.push_max);
        const double dir = er.uniform(-std::numbers::pi, std::numbers::pi);
        const Vec2 to = from + Vec2{std::cos(dir), std::sin(dir)} * mag;
        if (to.x < 0.05 || to.x > 0.95 || to.y < 0.05 || to.y > 0.95) continue;
        action = sim::ActionPrimitive::push_pull(from, to);
      } else {
        const double mag = er.uniform(opts.rotate_min, opts.rotate_max);
        action = sim::ActionPrimitive::rotate(from, er.bernoulli(0.5) ? mag : -mag);
      }

      auto result = sim::apply_primitive(scene, action, er);
      if (!result.success || result.moved_id != id) continue;

      const int idle_pre = er.index(opts.idle_max - opts.idle_min + 1) + opts.idle_min;
      const int idle_post = er.index(opts.idle_max - opts.idle_min + 1) + opts.idle_min;
      std::vector<sim::WorldState> states(static_cast<std::size_t>(idle_pre + 1), scene);
      for (auto& f : sim::interpolate_motion(scene, result, cls, kFramesPerSegment))
        states.push_back(std::move(f));
      for (int k = 0; k < idle_post; ++k) states.push_back(result.state);

      const PointFlow raw = extract_flow(states);
      if (raw.empty()) continue;
      const auto window = locate_moving(raw);
      if (!window) continue;

      PlayRecord& rec = records[static_cast<std::size_t>(i)];
      rec.pre_observation = sim::observe(scene, er);
      rec.flow = downsample_flow(crop_flow(raw, window->start, window->end));
      rec.primitive = action;
      rec.moved_id = id;
      break;
    }
  }
  return records;
}

std::vector<ExpertDemo> gen_expert(sim::TaskKind task, int demos, Rng& rng,
                                   const sim::EnvParams& env) {
  if (demos < 1) throw std::invalid_argument("gen_expert: demos must be >= 1");
  const Rng base = rng.derive(rng.engine()());
  std::vector<ExpertDemo> out(static_cast<std::size_t>(demos));
  for (int i = 0; i < demos; ++i) {
    Rng er = base.derive(static_cast<std::uint64_t>(i));
    sim::WorldState current = sim::sample_scenario(task, sim::Split::InDist, er, env);
    // Instructions alternate so both instruction-specific regressors see half the demos.
    while (task == sim::TaskKind::MultiTask && current.goal.instruction != i % 2)
      current = sim::sample_scenario(task, sim::Split::InDist, er, env);
    ExpertDemo& demo = out[static_cast<std::size_t>(i)];
    demo.task = task;
    demo.start = current;
    for (const auto& action : oracle_base_plan(current)) {
      demo.pairs.emplace_back(sim::observe(current, er), action);
      current = sim::apply_primitive(current, action, er).state;
    }
    demo.success = sim::is_success(current);
  }
  return out;
}

}  // namespace anchor::data
