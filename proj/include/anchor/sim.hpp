#pragma once

// Kinematic 2D tabletop world: objects, occlusion, action primitives, task
// goals and scenario samplers. All distances are in workspace units on the
// unit square.

#include <array>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "anchor/geometry.hpp"
#include "anchor/rng.hpp"

namespace anchor::sim {

enum class ObjectClass { Target, Obstructor, Container, Tool, Distractor };
inline constexpr int kNumClasses = 5;

enum class ShapeKind { Circle, Rect };

struct Shape {
  ShapeKind kind = ShapeKind::Circle;
  double a = 0.0;  // radius, or half width
  double b = 0.0;  // unused for circles, half height for rects

  static Shape circle(double radius) { return {ShapeKind::Circle, radius, 0.0}; }
  static Shape rect(double half_w, double half_h) { return {ShapeKind::Rect, half_w, half_h}; }
};

struct ObjectSpec {
  int id = 0;
  ObjectClass cls = ObjectClass::Target;
  Shape shape;
  bool graspable = true;
  bool movable = true;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]

  Vec2 position() const { return {x, y}; }
};

struct SceneObject {
  ObjectSpec spec;
  Pose2 pose;
  int layer = 0;  // stacking order; higher layers rest on top
};

/// Transition-kernel parameters.
struct EnvParams {
  double sigma_act = 0.0;
  double sigma_obs = 0.0;
  double grasp_radius = 0.06;
};

enum class TaskKind { PickPlace, RevealPick, RotatePlace, MultiTask };
inline constexpr std::array<TaskKind, 4> kAllTasks = {TaskKind::PickPlace, TaskKind::RevealPick,
                                                      TaskKind::RotatePlace, TaskKind::MultiTask};

enum class Split { InDist, OOD };

struct GoalSpec {
  TaskKind task = TaskKind::PickPlace;
  int target_id = 0;
  int container_id = -1;
  double r_succ = 0.05;
  double theta_lo = -0.15;
  double theta_hi = 0.15;
  Vec2 zone;            // serve zone, or the row slot for RotatePlace
  int instruction = -1;  // MultiTask: 0 or 1
  int other_id = -1;     // MultiTask: the item that must stay put
  Vec2 other_start;
};

struct WorldState {
  std::vector<SceneObject> objects;  // objects[i].spec.id == i
  std::map<int, int> covered_by;     // covered id -> immediate coverer id
  GoalSpec goal;
  EnvParams env;

  const SceneObject& object(int id) const { return objects.at(static_cast<std::size_t>(id)); }
  SceneObject& object(int id) { return objects.at(static_cast<std::size_t>(id)); }
  bool is_covered(int id) const { return covered_by.contains(id); }
};

enum class PrimitiveClass { PickPlace = 0, PushPull = 1, Rotate = 2 };
inline constexpr int kNumPrimitiveClasses = 3;

struct ActionPrimitive {
  PrimitiveClass cls = PrimitiveClass::PickPlace;
  std::array<double, 4> p{};  // Rotate: (x_c, y_c, dtheta, 0)

  static ActionPrimitive pick_place(Vec2 from, Vec2 to);
  static ActionPrimitive push_pull(Vec2 from, Vec2 to);
  static ActionPrimitive rotate(Vec2 center, double dtheta);

  Vec2 start() const { return {p[0], p[1]}; }
  Vec2 end() const { return {p[2], p[3]}; }
  friend bool operator==(const ActionPrimitive&, const ActionPrimitive&) = default;
};

struct StepResult {
  WorldState state;
  bool success = false;
  int moved_id = -1;
};

inline constexpr int kBoundaryKeypoints = 4;
inline constexpr int kKeypointsPerObject = kBoundaryKeypoints + 1;

struct Keypoint {
  Vec2 point;
  ObjectClass cls = ObjectClass::Target;
  int track = 0;    // tracker identity (object id)
  int slot = 0;     // 0..K-1 boundary, K = center
  Vec2 canonical;   // model-frame location of this keypoint
};

struct Observation {
  std::vector<Keypoint> keypoints;
  Eigen::VectorXd feature;
  std::optional<int> instruction;
};

// --- geometry of objects ---------------------------------------------------

/// Model-frame keypoints: K boundary markers followed by the center.
std::vector<Vec2> canonical_keypoints(const Shape& shape);
std::vector<Vec2> world_keypoints(const SceneObject& obj);
bool footprint_contains(const SceneObject& obj, Vec2 point);
bool occludes(ObjectClass cls);

/// Rebuilds covered_by from footprints and layers.
void recompute_cover(WorldState& state);

// --- operations ------------------------------------------------------------

StepResult apply_primitive(const WorldState& state, const ActionPrimitive& action, Rng& rng);
Observation observe(const WorldState& state, Rng& rng);
bool is_success(const WorldState& state);
WorldState sample_scenario(TaskKind task, Split split, Rng& rng, const EnvParams& env = {},
                           double nesting_prob = 0.5);
Eigen::VectorXd state_vector(const WorldState& state);

/// Intermediate frames of a primitive's motion: `frames` states ending in
/// `after` (frame 0, the `before` state, is not included).
std::vector<WorldState> interpolate_motion(const WorldState& before, const StepResult& after,
                                           PrimitiveClass cls, int frames);

// --- task layouts ------------------------------------------------------------

struct Box {
  Vec2 lo;
  Vec2 hi;
  bool contains(Vec2 p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  Vec2 sample(Rng& rng) const { return {rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)}; }
};

struct TaskLayout {
  Box target_region;             // where the task's target object is placed
  Box second_region;             // MultiTask: the second item's plate region
  Vec2 container_anchor;         // PickPlace: the container's trained spot
  double container_anchor_tol;   // oracle treats the container as anchored within this
  Box container_ood;             // PickPlace: shifted container support
  std::map<int, Vec2> parking;   // clear-zone spots for obstructors
  Vec2 zone;                     // serve zone / row slot
  double ood_theta_min;          // RotatePlace: |theta| range for shifted starts
  double ood_theta_max;
};

const TaskLayout& layout(TaskKind task);

/// The object the task's final step manipulates (MultiTask: the instructed item).
int task_object(const WorldState& state);

/// True when every object sits inside the workspace margins and the scene
/// belongs to the shifted (OOD) support of its task.
bool in_ood_support(const WorldState& state);

std::string_view to_string(TaskKind task);
std::string_view to_string(ObjectClass cls);
std::string_view to_string(PrimitiveClass cls);
std::string_view to_string(Split split);
TaskKind parse_task(std::string_view name);
ObjectClass parse_object_class(std::string_view name);
PrimitiveClass parse_primitive_class(std::string_view name);

}  // namespace anchor::sim
