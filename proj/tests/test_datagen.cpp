#include <cmath>
#include <numbers>

#include "doctest.h"

#include "anchor/datagen.hpp"
#include "anchor/flow.hpp"

using namespace anchor;
using namespace anchor::data;

namespace {

// Single point moving along a polyline with given per-frame positions.
PointFlow track(const std::vector<Vec2>& path) {
  PointFlow f(static_cast<int>(path.size()), 1);
  for (int i = 0; i < f.frames; ++i) f.set(i, 0, path[static_cast<std::size_t>(i)]);
  return f;
}

}  // namespace

TEST_CASE("score labels") {
  SUBCASE("worked values") {
    const auto c = label_scores(5, 1.0, 4.0);
    CHECK(c[0] == 1.0);
    CHECK(c[4] == 0.0);
    CHECK(c[2] == 0.75);
  }
  SUBCASE("strictly decreasing with constant second difference") {
    for (const int T : {2, 3, 7, 40, 121}) {
      const double beta = T - 1;
      const auto c = label_scores(T, 1.0, beta);
      REQUIRE(static_cast<int>(c.size()) == T);
      for (int t = 1; t < T; ++t) CHECK(c[t] < c[t - 1]);
      for (int t = 1; t + 1 < T; ++t)
        CHECK(std::abs((c[t + 1] - 2 * c[t] + c[t - 1]) + 2.0 / (beta * beta)) <= 1e-12);
    }
  }
  SUBCASE("alpha scales the offset") {
    const auto c = label_scores(3, 2.5, 2.0);
    CHECK(c[0] == 2.5);
    CHECK(c[2] == 1.5);
  }
}

TEST_CASE("scripted demos") {
  SUBCASE("two-level nesting yields two pick-place segments that uncover the target") {
    Rng rng(1);
    const auto scene = sim::sample_scenario(sim::TaskKind::RevealPick, sim::Split::OOD, rng, {}, 1.0);
    REQUIRE(scene.is_covered(0));
    REQUIRE(scene.covered_by.size() == 2);
    const auto demo = script_demo(scene, rng);
    REQUIRE(demo.primitives.size() == 2);
    for (const auto& p : demo.primitives) CHECK(p.cls == sim::PrimitiveClass::PickPlace);
    CHECK_FALSE(demo.states.back().is_covered(0));
    CHECK(demo.score_labels.size() == demo.states.size());
    CHECK(demo.score_labels.front() == 1.0);
    CHECK(demo.score_labels.back() == 0.0);
  }
  SUBCASE("an anchor start gives a single-frame video") {
    Rng rng(2);
    const auto scene = sim::sample_scenario(sim::TaskKind::RevealPick, sim::Split::InDist, rng);
    const auto demo = script_demo(scene, rng);
    CHECK(demo.length() == 1);
    CHECK(demo.primitives.empty());
    CHECK(demo.score_labels == std::vector<double>{1.0});
  }
  SUBCASE("a tilted driver is rotated back into the band") {
    Rng rng(3);
    auto scene = sim::sample_scenario(sim::TaskKind::RotatePlace, sim::Split::InDist, rng);
    scene.object(scene.goal.target_id).pose.theta = std::numbers::pi / 3;
    const auto demo = script_demo(scene, rng);
    REQUIRE(demo.primitives.size() == 1);
    CHECK(demo.primitives[0].cls == sim::PrimitiveClass::Rotate);
    const double th = demo.states.back().object(scene.goal.target_id).pose.theta;
    CHECK(th >= scene.goal.theta_lo);
    CHECK(th <= scene.goal.theta_hi);
  }
  SUBCASE("segment flows have the fixed horizon") {
    Rng rng(4);
    const auto scene = sim::sample_scenario(sim::TaskKind::RevealPick, sim::Split::OOD, rng, {}, 1.0);
    const auto demo = script_demo(scene, rng);
    for (int s = 0; s < static_cast<int>(demo.segments.size()); ++s)
      CHECK(segment_flow(demo, s).frames == kFlowHorizon);
  }
}

TEST_CASE("play episodes") {
  Rng rng(5);
  const auto play = gen_play(300, rng);
  REQUIRE(play.size() == 300);
  int push = 0, rot = 0;
  for (const auto& r : play) {
    CHECK(r.flow.frames == kFlowHorizon);
    CHECK(r.flow.points == sim::kKeypointsPerObject);
    const auto& a = r.primitive;
    if (a.cls == sim::PrimitiveClass::PushPull) {
      const Vec2 shift = r.flow.frame_centroid(kFlowHorizon - 1) - r.flow.frame_centroid(0);
      const Vec2 cmd = a.end() - a.start();
      CHECK(std::abs(shift.x - cmd.x) <= 1e-6);
      CHECK(std::abs(shift.y - cmd.y) <= 1e-6);
      ++push;
    } else if (a.cls == sim::PrimitiveClass::Rotate) {
      const auto first = r.flow.frame(0);
      const auto last = r.flow.frame(kFlowHorizon - 1);
      CHECK(std::abs(normalize_angle(procrustes_angle(first, last) - a.p[2])) <= 1e-6);
      ++rot;
    }
    // Locating the motion again finds the grasped object at its start.
    const auto w = locate_moving(r.flow);
    REQUIRE(w.has_value());
    const Vec2 c = r.flow.frame_centroid(0);
    CHECK(w->box_contains(c));
  }
  CHECK(push > 0);
  CHECK(rot > 0);
}

TEST_CASE("play generation is reproducible") {
  Rng a(9), b(9);
  const auto pa = gen_play(20, a);
  const auto pb = gen_play(20, b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].flow == pb[i].flow);
    CHECK(pa[i].primitive == pb[i].primitive);
  }
}

TEST_CASE("flow extraction") {
  Rng rng(6);
  const auto scene = sim::sample_scenario(sim::TaskKind::RevealPick, sim::Split::OOD, rng, {}, 1.0);
  const auto demo = script_demo(scene, rng);
  // Both obstructors move, the target does not.
  const auto moved = moving_objects(demo.states);
  CHECK(moved == std::vector<int>{1, 2});
  const auto flow = extract_flow(demo.states);
  CHECK(flow.points == 2 * sim::kKeypointsPerObject);
  CHECK(flow.frames == demo.length());
  // Points are grouped by object: the first group follows object 1.
  const auto kp1 = sim::world_keypoints(demo.states.front().object(1));
  for (int p = 0; p < sim::kKeypointsPerObject; ++p) CHECK(flow.at(0, p) == kp1[static_cast<std::size_t>(p)]);

  const std::vector<sim::WorldState> still(5, scene);
  CHECK(extract_flow(still).empty());
}

TEST_CASE("downsampling") {
  SUBCASE("identity at the native horizon") {
    std::vector<Vec2> path;
    for (int i = 0; i < kFlowHorizon; ++i) path.push_back({0.1 * i * i, std::sin(i)});
    const auto f = track(path);
    CHECK(downsample_flow(f, kFlowHorizon) == f);
  }
  SUBCASE("straight line lands on k/17 of the way") {
    std::vector<Vec2> path;
    for (int i = 0; i < 40; ++i) path.push_back(lerp({0.1, 0.2}, {0.8, 0.5}, i / 39.0));
    const auto d = downsample_flow(track(path));
    REQUIRE(d.frames == kFlowHorizon);
    CHECK(d.at(0, 0) == path.front());
    CHECK(d.at(kFlowHorizon - 1, 0) == path.back());
    for (int k = 0; k < kFlowHorizon; ++k) {
      const Vec2 want = lerp({0.1, 0.2}, {0.8, 0.5}, k / 17.0);
      CHECK(distance(d.at(k, 0), want) <= 1e-12);
    }
  }
  SUBCASE("property: constant velocity is preserved") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 2 + rng.index(120);
      const Vec2 a{rng.uniform(0, 1), rng.uniform(0, 1)};
      const Vec2 v{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
      std::vector<Vec2> path;
      for (int i = 0; i < n; ++i) path.push_back(a + v * static_cast<double>(i));
      const auto d = downsample_flow(track(path));
      CHECK(d.at(0, 0) == path.front());
      CHECK(d.at(kFlowHorizon - 1, 0) == path.back());
      const Vec2 step = (path.back() - path.front()) * (1.0 / (kFlowHorizon - 1));
      for (int k = 1; k < kFlowHorizon; ++k) CHECK(distance(d.at(k, 0) - d.at(k - 1, 0), step) <= 1e-12);
    }
  }
}

TEST_CASE("motion localization") {
  SUBCASE("static flow has no motion") {
    CHECK_FALSE(locate_moving(track(std::vector<Vec2>(30, Vec2{0.3, 0.3}))).has_value());
  }
  SUBCASE("moves only in frames 5..12") {
    std::vector<Vec2> path;
    for (int i = 0; i < 20; ++i) {
      const int k = std::clamp(i, 5, 12);
      path.push_back({0.2 + 0.01 * (k - 5), 0.4});
    }
    PointFlow f(20, 2);
    for (int i = 0; i < 20; ++i) {
      f.set(i, 0, path[static_cast<std::size_t>(i)]);
      f.set(i, 1, {0.9, 0.9});
    }
    const auto w = locate_moving(f);
    REQUIRE(w.has_value());
    CHECK(w->start == 5);
    CHECK(w->end == 12);
    CHECK(w->points == std::vector<int>{0});
    CHECK(w->box_contains({0.2, 0.4}));
    CHECK_FALSE(w->box_contains({0.9, 0.9}));
  }
  SUBCASE("a threshold above every displacement finds nothing") {
    std::vector<Vec2> path;
    for (int i = 0; i < 10; ++i) path.push_back({0.1 * i, 0.0});
    CHECK_FALSE(locate_moving(track(path), 5.0).has_value());
  }
}

TEST_CASE("expert demos") {
  for (const auto task : sim::kAllTasks) {
    Rng rng(8);
    const auto demos = gen_expert(task, 20, rng);
    REQUIRE(demos.size() == 20);
    for (const auto& d : demos) {
      CHECK(d.success);
      CHECK_FALSE(d.pairs.empty());
    }
  }
  SUBCASE("pick-place is a single step") {
    Rng rng(8);
    for (const auto& d : gen_expert(sim::TaskKind::PickPlace, 5, rng)) {
      REQUIRE(d.pairs.size() == 1);
      CHECK(d.pairs[0].second.cls == sim::PrimitiveClass::PickPlace);
    }
  }
  SUBCASE("reproducible") {
    Rng a(3), b(3);
    const auto da = gen_expert(sim::TaskKind::MultiTask, 6, a);
    const auto db = gen_expert(sim::TaskKind::MultiTask, 6, b);
    for (std::size_t i = 0; i < da.size(); ++i) {
      REQUIRE(da[i].pairs.size() == db[i].pairs.size());
      for (std::size_t k = 0; k < da[i].pairs.size(); ++k) CHECK(da[i].pairs[k].second == db[i].pairs[k].second);
    }
  }
}
