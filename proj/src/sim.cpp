#include "anchor/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "anchor/features.hpp"

namespace anchor::sim {

namespace {

constexpr double kLiftHeight = 0.04;
constexpr double kMargin = 0.03;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

int top_layer(const WorldState& s) {
  int top = 0;
  for (const auto& o : s.objects) top = std::max(top, o.layer);
  return top;
}

int find_eligible(const WorldState& s, PrimitiveClass cls, Vec2 at) {
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& o : s.objects) {
    if (!o.spec.movable || s.is_covered(o.spec.id)) continue;
    if (cls == PrimitiveClass::PickPlace && !o.spec.graspable) continue;
    const double d = distance(o.pose.position(), at);
    if (d > s.env.grasp_radius) continue;
    if (d < best_dist) {  // ascending id order resolves ties to the lowest id
      best_dist = d;
      best = o.spec.id;
    }
  }
  return best;
}

SceneObject make_object(int id, ObjectClass cls, Shape shape, bool graspable, bool movable,
                        Vec2 at, double theta, int layer) {
  SceneObject o;
  o.spec = {id, cls, shape, graspable, movable};
  o.pose = {at.x, at.y, normalize_angle(theta)};
  o.layer = layer;
  return o;
}

Vec2 jitter(Vec2 c, double half, Rng& rng) {
  return {c.x + rng.uniform(-half, half), c.y + rng.uniform(-half, half)};
}

const TaskLayout kPickPlaceLayout{
    .target_region = {{0.26, 0.40}, {0.38, 0.60}},
    .second_region = {},
    .container_anchor = {0.62, 0.50},
    .container_anchor_tol = 0.02,
    .container_ood = {{0.76, 0.36}, {0.92, 0.64}},
    .parking = {},
    .zone = {},
    .ood_theta_min = 0.0,
    .ood_theta_max = 0.0,
};

const TaskLayout kRevealPickLayout{
    .target_region = {{0.25, 0.35}, {0.50, 0.65}},
    .second_region = {},
    .container_anchor = {},
    .container_anchor_tol = 0.0,
    .container_ood = {},
    .parking = {{1, {0.85, 0.80}}, {2, {0.82, 0.22}}},
    .zone = {0.12, 0.15},
    .ood_theta_min = 0.0,
    .ood_theta_max = 0.0,
};

const TaskLayout kRotatePlaceLayout{
    .target_region = {{0.20, 0.30}, {0.45, 0.70}},
    .second_region = {},
    .container_anchor = {},
    .container_anchor_tol = 0.0,
    .container_ood = {},
    .parking = {},
    .zone = {0.75, 0.52},
    .ood_theta_min = 0.5,
    .ood_theta_max = 1.1,
};

const TaskLayout kMultiTaskLayout{
    .target_region = {{0.18, 0.45}, {0.40, 0.75}},
    .second_region = {{0.55, 0.45}, {0.77, 0.75}},
    .container_anchor = {},
    .container_anchor_tol = 0.0,
    .container_ood = {},
    .parking = {{2, {0.85, 0.85}}},
    .zone = {0.45, 0.15},
    .ood_theta_min = 0.0,
    .ood_theta_max = 0.0,
};

constexpr double kRotateBandCenter = 0.0;
constexpr double kRotateInDistTheta = 0.08;
const Vec2 kToolA{0.75, 0.30};
const Vec2 kToolB{0.75, 0.40};

WorldState base_state(TaskKind task, const EnvParams& env) {
  WorldState s;
  s.env = env;
  s.goal.task = task;
  s.goal.r_succ = 0.05;
  return s;
}

WorldState sample_pick_place(Split split, Rng& rng, const EnvParams& env) {
  const auto& L = kPickPlaceLayout;
  WorldState s = base_state(TaskKind::PickPlace, env);
  const Vec2 carrot = L.target_region.sample(rng);
  const double carrot_theta = rng.uniform(-0.1, 0.1);
  const Vec2 bowl = split == Split::InDist ? jitter(L.container_anchor, 0.005, rng)
                                           : L.container_ood.sample(rng);
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::rect(0.04, 0.015), true, true,
                                  carrot, carrot_theta, 0));
  s.objects.push_back(make_object(1, ObjectClass::Container, Shape::circle(0.08), false, true,
                                  bowl, 0.0, 1));
  s.goal.target_id = 0;
  s.goal.container_id = 1;
  return s;
}

WorldState sample_reveal_pick(Split split, Rng& rng, const EnvParams& env, double nesting_prob) {
  const auto& L = kRevealPickLayout;
  WorldState s = base_state(TaskKind::RevealPick, env);
  const Vec2 block = L.target_region.sample(rng);
  Vec2 cup = jitter(L.parking.at(1), 0.01, rng);
  Vec2 box = jitter(L.parking.at(2), 0.01, rng);
  if (split == Split::OOD) {
    if (rng.bernoulli(nesting_prob)) {
      cup = jitter(block, 0.02, rng);
      box = jitter(cup, 0.02, rng);
    } else {
      box = jitter(block, 0.02, rng);
    }
  }
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::circle(0.025), true, true,
                                  block, 0.0, 0));
  s.objects.push_back(make_object(1, ObjectClass::Obstructor, Shape::circle(0.06), true, true,
                                  cup, rng.uniform(-0.05, 0.05), 1));
  s.objects.push_back(make_object(2, ObjectClass::Obstructor, Shape::rect(0.09, 0.07), true,
                                  true, box, rng.uniform(-0.05, 0.05), 2));
  s.goal.target_id = 0;
  s.goal.zone = L.zone;
  return s;
}

WorldState sample_rotate_place(Split split, Rng& rng, const EnvParams& env) {
  const auto& L = kRotatePlaceLayout;
  WorldState s = base_state(TaskKind::RotatePlace, env);
  const Vec2 driver = L.target_region.sample(rng);
  double theta = kRotateBandCenter + rng.uniform(-kRotateInDistTheta, kRotateInDistTheta);
  if (split == Split::OOD) {
    const double mag = rng.uniform(L.ood_theta_min, L.ood_theta_max);
    theta = kRotateBandCenter + (rng.bernoulli(0.5) ? mag : -mag);
  }
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::rect(0.07, 0.012), true, true,
                                  driver, theta, 0));
  s.objects.push_back(make_object(1, ObjectClass::Tool, Shape::rect(0.07, 0.012), false, false,
                                  kToolA, 0.0, 1));
  s.objects.push_back(make_object(2, ObjectClass::Tool, Shape::rect(0.07, 0.012), false, false,
                                  kToolB, 0.0, 2));
  s.goal.target_id = 0;
  s.goal.zone = L.zone;
  s.goal.theta_lo = kRotateBandCenter - 0.15;
  s.goal.theta_hi = kRotateBandCenter + 0.15;
  return s;
}

WorldState sample_multi_task(Split split, Rng& rng, const EnvParams& env) {
  const auto& L = kMultiTaskLayout;
  WorldState s = base_state(TaskKind::MultiTask, env);
  const Vec2 burger = L.target_region.sample(rng);
  const Vec2 banana = kMultiTaskLayout.second_region.sample(rng);
  const int instruction = rng.index(2);
  const Vec2 instructed = instruction == 0 ? burger : banana;
  Vec2 lid = jitter(L.parking.at(2), 0.01, rng);
  if (split == Split::OOD) lid = jitter(instructed, 0.02, rng);
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::circle(0.035), true, true,
                                  burger, 0.0, 0));
  s.objects.push_back(make_object(1, ObjectClass::Distractor, Shape::rect(0.05, 0.02), true,
                                  true, banana, rng.uniform(-0.1, 0.1), 1));
  s.objects.push_back(make_object(2, ObjectClass::Obstructor, Shape::circle(0.07), true, true,
                                  lid, 0.0, 2));
  s.goal.instruction = instruction;
  s.goal.target_id = instruction;
  s.goal.other_id = 1 - instruction;
  s.goal.other_start = instruction == 0 ? banana : burger;
  s.goal.zone = L.zone;
  return s;
}

bool inside_margins(Vec2 p) {
  return p.x >= kMargin && p.x <= 1.0 - kMargin && p.y >= kMargin && p.y <= 1.0 - kMargin;
}

}  // namespace

ActionPrimitive ActionPrimitive::pick_place(Vec2 from, Vec2 to) {
  return {PrimitiveClass::PickPlace, {from.x, from.y, to.x, to.y}};
}
ActionPrimitive ActionPrimitive::push_pull(Vec2 from, Vec2 to) {
  return {PrimitiveClass::PushPull, {from.x, from.y, to.x, to.y}};
}
ActionPrimitive ActionPrimitive::rotate(Vec2 center, double dtheta) {
  return {PrimitiveClass::Rotate, {center.x, center.y, normalize_angle(dtheta), 0.0}};
}

std::vector<Vec2> canonical_keypoints(const Shape& shape) {
  if (shape.kind == ShapeKind::Circle) {
    const double r = shape.a;
    return {{r, 0.0}, {0.0, r}, {-r, 0.0}, {0.0, -r}, {0.0, 0.0}};
  }
  const double w = shape.a;
  const double h = shape.b;
  return {{w, h}, {-w, h}, {-w, -h}, {w, -h}, {0.0, 0.0}};
}

std::vector<Vec2> world_keypoints(const SceneObject& obj) {
  auto pts = canonical_keypoints(obj.spec.shape);
  for (auto& p : pts) p = rotate(p, obj.pose.theta) + obj.pose.position();
  return pts;
}

bool footprint_contains(const SceneObject& obj, Vec2 point) {
  const Vec2 local = rotate(point - obj.pose.position(), -obj.pose.theta);
  if (obj.spec.shape.kind == ShapeKind::Circle) return norm(local) <= obj.spec.shape.a;
  return std::abs(local.x) <= obj.spec.shape.a && std::abs(local.y) <= obj.spec.shape.b;
}

bool occludes(ObjectClass cls) { return cls == ObjectClass::Obstructor; }

void recompute_cover(WorldState& state) {
  state.covered_by.clear();
  for (const auto& a : state.objects) {
    int best = -1;
    int best_layer = std::numeric_limits<int>::max();
    for (const auto& b : state.objects) {
      if (b.spec.id == a.spec.id || !occludes(b.spec.cls) || b.layer <= a.layer) continue;
      if (!footprint_contains(b, a.pose.position())) continue;
      if (b.layer < best_layer) {
        best_layer = b.layer;
        best = b.spec.id;
      }
    }
    if (best >= 0) state.covered_by[a.spec.id] = best;
  }
}

StepResult apply_primitive(const WorldState& state, const ActionPrimitive& action, Rng& rng) {
  StepResult out{state, false, -1};
  const int id = find_eligible(state, action.cls, action.start());
  if (id < 0) return out;
  SceneObject& obj = out.state.object(id);
  const double sigma = state.env.sigma_act;
  switch (action.cls) {
    case PrimitiveClass::PickPlace: {
      const double nx = rng.normal(sigma);
      const double ny = rng.normal(sigma);
      obj.pose.x = clamp01(action.p[2] + nx);
      obj.pose.y = clamp01(action.p[3] + ny);
      obj.layer = top_layer(state) + 1;
      break;
    }
    case PrimitiveClass::PushPull: {
      const double nx = rng.normal(sigma);
      const double ny = rng.normal(sigma);
      obj.pose.x = clamp01(obj.pose.x + (action.p[2] - action.p[0]) + nx);
      obj.pose.y = clamp01(obj.pose.y + (action.p[3] - action.p[1]) + ny);
      break;
    }
    case PrimitiveClass::Rotate:
      obj.pose.theta = normalize_angle(obj.pose.theta + action.p[2] + rng.normal(sigma));
      break;
  }
  recompute_cover(out.state);
  out.success = true;
  out.moved_id = id;
  return out;
}

Observation observe(const WorldState& state, Rng& rng) {
  Observation obs;
  const double sigma = state.env.sigma_obs;
  for (const auto& o : state.objects) {
    if (state.is_covered(o.spec.id)) continue;
    const auto canon = canonical_keypoints(o.spec.shape);
    const auto world = world_keypoints(o);
    for (std::size_t k = 0; k < world.size(); ++k) {
      Keypoint kp;
      kp.point = world[k];
      kp.point.x += rng.normal(sigma);
      kp.point.y += rng.normal(sigma);
      kp.cls = o.spec.cls;
      kp.track = o.spec.id;
      kp.slot = static_cast<int>(k);
      kp.canonical = canon[k];
      obs.keypoints.push_back(kp);
    }
  }
  if (state.goal.task == TaskKind::MultiTask) obs.instruction = state.goal.instruction;
  obs.feature = learn::featurize(obs);
  return obs;
}

bool is_success(const WorldState& state) {
  const GoalSpec& g = state.goal;
  const SceneObject& target = state.object(g.target_id);
  const Vec2 pos = target.pose.position();
  switch (g.task) {
    case TaskKind::PickPlace:
      return distance(pos, state.object(g.container_id).pose.position()) <= g.r_succ;
    case TaskKind::RevealPick:
      return !state.is_covered(g.target_id) && distance(pos, g.zone) <= g.r_succ;
    case TaskKind::RotatePlace:
      return target.pose.theta >= g.theta_lo && target.pose.theta <= g.theta_hi &&
             distance(pos, g.zone) <= g.r_succ;
    case TaskKind::MultiTask:
      return distance(pos, g.zone) <= g.r_succ &&
             distance(state.object(g.other_id).pose.position(), g.other_start) < g.r_succ;
  }
  return false;
}

WorldState sample_scenario(TaskKind task, Split split, Rng& rng, const EnvParams& env,
                           double nesting_prob) {
  WorldState s;
  switch (task) {
    case TaskKind::PickPlace: s = sample_pick_place(split, rng, env); break;
    case TaskKind::RevealPick: s = sample_reveal_pick(split, rng, env, nesting_prob); break;
    case TaskKind::RotatePlace: s = sample_rotate_place(split, rng, env); break;
    case TaskKind::MultiTask: s = sample_multi_task(split, rng, env); break;
  }
  recompute_cover(s);
  return s;
}

Eigen::VectorXd state_vector(const WorldState& state) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(state.objects.size() * 5));
  Eigen::Index i = 0;
  for (const auto& o : state.objects) {
    v[i++] = o.pose.x;
    v[i++] = o.pose.y;
    v[i++] = std::cos(o.pose.theta);
    v[i++] = std::sin(o.pose.theta);
    v[i++] = state.is_covered(o.spec.id) ? 1.0 : 0.0;
  }
  return v;
}

std::vector<WorldState> interpolate_motion(const WorldState& before, const StepResult& after,
                                           PrimitiveClass cls, int frames) {
  std::vector<WorldState> out;
  out.reserve(static_cast<std::size_t>(std::max(frames, 0)));
  if (frames <= 0) return out;
  if (after.moved_id < 0) {
    out.assign(static_cast<std::size_t>(frames), before);
    return out;
  }
  const SceneObject& from = before.object(after.moved_id);
  const SceneObject& to = after.state.object(after.moved_id);
  const double dtheta = normalize_angle(to.pose.theta - from.pose.theta);
  for (int k = 1; k < frames; ++k) {
    const double s = static_cast<double>(k) / frames;
    WorldState frame = before;
    SceneObject& obj = frame.object(after.moved_id);
    const Vec2 p = lerp(from.pose.position(), to.pose.position(), s);
    obj.pose.x = p.x;
    obj.pose.y = p.y;
    obj.pose.theta = normalize_angle(from.pose.theta + s * dtheta);
    if (cls == PrimitiveClass::PickPlace) {
      obj.pose.y = std::min(1.0, p.y + kLiftHeight * std::sin(std::numbers::pi * s));
      obj.layer = to.layer;
    }
    recompute_cover(frame);
    out.push_back(std::move(frame));
  }
  out.push_back(after.state);
  return out;
}

const TaskLayout& layout(TaskKind task) {
  switch (task) {
    case TaskKind::PickPlace: return kPickPlaceLayout;
    case TaskKind::RevealPick: return kRevealPickLayout;
    case TaskKind::RotatePlace: return kRotatePlaceLayout;
    case TaskKind::MultiTask: return kMultiTaskLayout;
  }
  throw std::invalid_argument("unknown task");
}

int task_object(const WorldState& state) { return state.goal.target_id; }

bool in_ood_support(const WorldState& state) {
  for (const auto& o : state.objects)
    if (!inside_margins(o.pose.position())) return false;
  const GoalSpec& g = state.goal;
  const Vec2 target = state.object(g.target_id).pose.position();
  switch (g.task) {
    case TaskKind::PickPlace:
      return kPickPlaceLayout.target_region.contains(target) &&
             kPickPlaceLayout.container_ood.contains(state.object(g.container_id).pose.position());
    case TaskKind::RevealPick:
      return kRevealPickLayout.target_region.contains(target) && state.is_covered(g.target_id);
    case TaskKind::RotatePlace: {
      const double mag = std::abs(normalize_angle(state.object(g.target_id).pose.theta -
                                                  kRotateBandCenter));
      return kRotatePlaceLayout.target_region.contains(target) &&
             mag >= kRotatePlaceLayout.ood_theta_min && mag <= kRotatePlaceLayout.ood_theta_max;
    }
    case TaskKind::MultiTask: {
      const Vec2 burger = state.object(0).pose.position();
      const Vec2 banana = state.object(1).pose.position();
      return kMultiTaskLayout.target_region.contains(burger) && kMultiTaskLayout.second_region.contains(banana) &&
             state.is_covered(g.target_id);
    }
  }
  return false;
}

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::PickPlace: return "PickPlace";
    case TaskKind::RevealPick: return "RevealPick";
    case TaskKind::RotatePlace: return "RotatePlace";
    case TaskKind::MultiTask: return "MultiTask";
  }
  return "?";
}

std::string_view to_string(ObjectClass cls) {
  switch (cls) {
    case ObjectClass::Target: return "Target";
    case ObjectClass::Obstructor: return "Obstructor";
    case ObjectClass::Container: return "Container";
    case ObjectClass::Tool: return "Tool";
    case ObjectClass::Distractor: return "Distractor";
  }
  return "?";
}

std::string_view to_string(PrimitiveClass cls) {
  switch (cls) {
    case PrimitiveClass::PickPlace: return "PickPlace";
    case PrimitiveClass::PushPull: return "PushPull";
    case PrimitiveClass::Rotate: return "Rotate";
  }
  return "?";
}

std::string_view to_string(Split split) { return split == Split::InDist ? "InDist" : "OOD"; }

TaskKind parse_task(std::string_view name) {
  for (TaskKind t : kAllTasks)
    if (to_string(t) == name) return t;
  throw std::invalid_argument("unknown task: " + std::string(name));
}

ObjectClass parse_object_class(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i) {
    const auto cls = static_cast<ObjectClass>(i);
    if (to_string(cls) == name) return cls;
  }
  throw std::invalid_argument("unknown object class: " + std::string(name));
}

PrimitiveClass parse_primitive_class(std::string_view name) {
  for (int i = 0; i < kNumPrimitiveClasses; ++i) {
    const auto cls = static_cast<PrimitiveClass>(i);
    if (to_string(cls) == name) return cls;
  }
  throw std::invalid_argument("unknown primitive class: " + std::string(name));
}

}  // namespace anchor::sim
