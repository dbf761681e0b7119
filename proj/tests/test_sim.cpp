#include <cmath>
#include <numbers>

#include "doctest.h"

#include "anchor/datagen.hpp"
#include "anchor/sim.hpp"

using namespace anchor;
using namespace anchor::sim;

namespace {

SceneObject make_object(int id, ObjectClass cls, Shape shape, Pose2 pose, int layer = 0) {
  SceneObject o;
  o.spec = {id, cls, shape, true, true};
  o.pose = pose;
  o.layer = layer;
  return o;
}

WorldState single_object(Pose2 pose) {
  WorldState s;
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::circle(0.03), pose));
  return s;
}

// Independent spread oracle: explicit two-pass mean and variance per column.
double spread(const std::vector<Eigen::VectorXd>& rows) {
  const auto d = rows.front().size();
  double total = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    total += var / static_cast<double>(rows.size());
  }
  return total;
}

// Runs the scripted reduction to a fixed point, then the scripted task plan.
WorldState run_oracle(WorldState s) {
  Rng rng(1);
  for (int i = 0; i < 8; ++i) {
    const auto a = data::oracle_reduction_step(s);
    if (!a) break;
    s = apply_primitive(s, *a, rng).state;
  }
  for (const auto& a : data::oracle_base_plan(s)) s = apply_primitive(s, a, rng).state;
  return s;
}

}  // namespace

TEST_CASE("pick-place teleports the grasped object exactly at zero noise") {
  Rng rng(3);
  const auto r = apply_primitive(single_object({0.2, 0.3, 0.0}),
                                 ActionPrimitive::pick_place({0.2, 0.3}, {0.7, 0.7}), rng);
  CHECK(r.success);
  CHECK(r.moved_id == 0);
  CHECK(r.state.object(0).pose.x == 0.7);
  CHECK(r.state.object(0).pose.y == 0.7);
}

TEST_CASE("rotate by a quarter turn from pi/2 stores pi") {
  Rng rng(3);
  const auto r = apply_primitive(single_object({0.5, 0.5, std::numbers::pi / 2}),
                                 ActionPrimitive::rotate({0.5, 0.5}, std::numbers::pi / 2), rng);
  CHECK(r.success);
  CHECK(r.state.object(0).pose.theta == std::numbers::pi);
}

TEST_CASE("a grasp out of reach leaves the state unchanged") {
  const WorldState s = single_object({0.2, 0.3, 0.1});
  const double reach = s.env.grasp_radius;
  Rng rng(3);
  const auto r = apply_primitive(s, ActionPrimitive::pick_place({0.2 + 3 * reach, 0.3}, {0.7, 0.7}), rng);
  CHECK_FALSE(r.success);
  CHECK(r.moved_id == -1);
  CHECK(state_vector(r.state) == state_vector(s));
}

TEST_CASE("grasp ties resolve to the lowest id") {
  WorldState s;
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::circle(0.02), {0.40, 0.5, 0.0}));
  s.objects.push_back(make_object(1, ObjectClass::Target, Shape::circle(0.02), {0.44, 0.5, 0.0}));
  Rng rng(0);
  const auto r = apply_primitive(s, ActionPrimitive::pick_place({0.42, 0.5}, {0.8, 0.8}), rng);
  CHECK(r.moved_id == 0);
}

TEST_CASE("observe emits K+1 keypoints per visible object and nothing for covered ones") {
  Rng rng(5);
  const WorldState in = sample_scenario(TaskKind::RevealPick, Split::InDist, rng);
  REQUIRE(in.covered_by.empty());
  Rng o1(9);
  CHECK(observe(in, o1).keypoints.size() == in.objects.size() * kKeypointsPerObject);

  const WorldState ood = sample_scenario(TaskKind::RevealPick, Split::OOD, rng);
  REQUIRE(ood.is_covered(ood.goal.target_id));
  Rng o2(9);
  const auto obs = observe(ood, o2);
  std::size_t visible = 0;
  for (const auto& o : ood.objects) visible += ood.is_covered(o.spec.id) ? 0 : 1;
  CHECK(obs.keypoints.size() == visible * kKeypointsPerObject);
  for (const auto& kp : obs.keypoints) CHECK(kp.cls != ObjectClass::Target);
}

TEST_CASE("observe is a pure function of state and seed") {
  Rng rng(2);
  WorldState s = sample_scenario(TaskKind::MultiTask, Split::OOD, rng);
  s.env.sigma_obs = 0.01;
  Rng a(77), b(77);
  const auto oa = observe(s, a);
  const auto ob = observe(s, b);
  REQUIRE(oa.keypoints.size() == ob.keypoints.size());
  for (std::size_t i = 0; i < oa.keypoints.size(); ++i) CHECK(oa.keypoints[i].point == ob.keypoints[i].point);
  CHECK(oa.feature == ob.feature);
  CHECK(oa.instruction == ob.instruction);
}

TEST_CASE("success predicates") {
  Rng rng(4);
  SUBCASE("pick-place with the target on the container center") {
    WorldState s = sample_scenario(TaskKind::PickPlace, Split::InDist, rng);
    auto& t = s.object(s.goal.target_id);
    t.pose.x = s.object(s.goal.container_id).pose.x;
    t.pose.y = s.object(s.goal.container_id).pose.y;
    CHECK(is_success(s));
  }
  SUBCASE("covered target never counts") {
    const WorldState s = sample_scenario(TaskKind::RevealPick, Split::OOD, rng);
    CHECK_FALSE(is_success(s));
  }
  SUBCASE("angle band is closed") {
    WorldState s = run_oracle(sample_scenario(TaskKind::RotatePlace, Split::InDist, rng));
    REQUIRE(is_success(s));
    s.object(s.goal.target_id).pose.theta = s.goal.theta_lo;
    CHECK(is_success(s));
    s.object(s.goal.target_id).pose.theta = s.goal.theta_hi;
    CHECK(is_success(s));
    s.object(s.goal.target_id).pose.theta = std::nextafter(s.goal.theta_lo, -1.0);
    CHECK_FALSE(is_success(s));
  }
}

TEST_CASE("scenario samplers") {
  SUBCASE("shifted reveal-pick always covers the target") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
      const auto s = sample_scenario(TaskKind::RevealPick, Split::OOD, rng);
      CHECK(s.is_covered(s.goal.target_id));
    }
  }
  SUBCASE("in-distribution pick-place is tighter than shifted") {
    Rng a(1), b(1);
    std::vector<Eigen::VectorXd> in, ood;
    for (int i = 0; i < 1000; ++i) {
      in.push_back(state_vector(sample_scenario(TaskKind::PickPlace, Split::InDist, a)));
      ood.push_back(state_vector(sample_scenario(TaskKind::PickPlace, Split::OOD, b)));
    }
    CHECK(spread(in) < spread(ood));
  }
  SUBCASE("fixed seed reproduces the scenario") {
    for (const auto task : kAllTasks) {
      Rng a(42), b(42);
      CHECK(state_vector(sample_scenario(task, Split::OOD, a)) == state_vector(sample_scenario(task, Split::OOD, b)));
    }
  }
}

TEST_CASE("state vector layout") {
  WorldState s;
  s.objects.push_back(make_object(0, ObjectClass::Target, Shape::circle(0.02), {0.5, 0.5, std::numbers::pi / 2}));
  s.objects.push_back(make_object(1, ObjectClass::Obstructor, Shape::circle(0.06), {0.5, 0.5, 0.0}, 1));
  recompute_cover(s);
  const auto v = state_vector(s);
  CHECK(v.size() == 10);
  CHECK(v[2] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v[3] == 1.0);
  CHECK(v[4] == 1.0);  // covered by the obstructor on top
  CHECK(v[9] == 0.0);
}

TEST_CASE("state dimension is fixed per task") {
  Rng rng(6);
  for (const auto task : kAllTasks) {
    const auto d = state_vector(sample_scenario(task, Split::InDist, rng)).size();
    for (int i = 0; i < 50; ++i) {
      CHECK(state_vector(sample_scenario(task, Split::OOD, rng)).size() == d);
      CHECK(state_vector(sample_scenario(task, Split::InDist, rng)).size() == d);
    }
  }
}

TEST_CASE("property: stored angles stay in (-pi, pi]") {
  Rng rng(10);
  for (int i = 0; i < 2000; ++i) {
    const double a = normalize_angle(rng.uniform(-50.0, 50.0));
    CHECK(a > -std::numbers::pi);
    CHECK(a <= std::numbers::pi);
  }
  CHECK(normalize_angle(-std::numbers::pi) == std::numbers::pi);
}

TEST_CASE("property: a full turn is a state-vector fixed point") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const WorldState s = sample_scenario(TaskKind::RotatePlace, Split::OOD, rng);
    const auto& t = s.object(s.goal.target_id);
    Rng r(0);
    const auto out = apply_primitive(s, ActionPrimitive::rotate(t.pose.position(), 2 * std::numbers::pi), r);
    CHECK((state_vector(out.state) - state_vector(s)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("property: cover relation stays consistent and acyclic under random primitives") {
  Rng rng(12);
  for (int episode = 0; episode < 200; ++episode) {
    const auto task = kAllTasks[static_cast<std::size_t>(episode % 4)];
    WorldState s = sample_scenario(task, episode % 2 ? Split::OOD : Split::InDist, rng);
    for (int step = 0; step < 4; ++step) {
      const auto& o = s.objects[static_cast<std::size_t>(rng.index(static_cast<int>(s.objects.size())))];
      const Vec2 from = o.pose.position();
      const Vec2 to{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      ActionPrimitive a;
      switch (rng.index(3)) {
        case 0: a = ActionPrimitive::pick_place(from, to); break;
        case 1: a = ActionPrimitive::push_pull(from, from + (to - from) * 0.3); break;
        default: a = ActionPrimitive::rotate(from, rng.uniform(-1.0, 1.0));
      }
      s = apply_primitive(s, a, rng).state;
      for (const auto& [covered, coverer] : s.covered_by) {
        CHECK(footprint_contains(s.object(coverer), s.object(covered).pose.position()));
        // Walking up the chain must terminate.
        int cur = covered, hops = 0;
        while (s.covered_by.contains(cur) && hops <= static_cast<int>(s.objects.size())) {
          cur = s.covered_by.at(cur);
          ++hops;
        }
        CHECK(hops <= static_cast<int>(s.objects.size()));
      }
    }
  }
}

TEST_CASE("property: zero-noise transitions are pure") {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const WorldState s = sample_scenario(kAllTasks[static_cast<std::size_t>(i % 4)], Split::OOD, rng);
    const auto& o = s.objects.back();
    const auto a = ActionPrimitive::push_pull(o.pose.position(), o.pose.position() + Vec2{0.05, -0.03});
    Rng r1(i), r2(1000 + i);
    CHECK(state_vector(apply_primitive(s, a, r1).state) == state_vector(apply_primitive(s, a, r2).state));
    Rng o1(i), o2(1000 + i);
    CHECK(observe(s, o1).feature == observe(s, o2).feature);
  }
}

TEST_CASE("property: the scripted oracle solves every sampled scenario") {
  for (const auto task : kAllTasks) {
    for (const auto split : {Split::InDist, Split::OOD}) {
      Rng rng(100 + static_cast<int>(task) * 2 + static_cast<int>(split));
      int solved = 0;
      for (int i = 0; i < 200; ++i) solved += is_success(run_oracle(sample_scenario(task, split, rng))) ? 1 : 0;
      INFO(to_string(task), " ", to_string(split));
      CHECK(solved == 200);
    }
  }
}

TEST_CASE("task and class names round-trip") {
  for (const auto t : kAllTasks) CHECK(parse_task(to_string(t)) == t);
  for (int c = 0; c < kNumClasses; ++c)
    CHECK(parse_object_class(to_string(static_cast<ObjectClass>(c))) == static_cast<ObjectClass>(c));
  CHECK_THROWS(parse_task("Juggle"));
}
