#include <cmath>

#include "doctest.h"

#include "anchor/gap.hpp"
#include "anchor/learn.hpp"
#include "anchor/theory.hpp"

using namespace anchor;
using namespace anchor::gap;

namespace {

InitialSampler sampler(sim::TaskKind task, sim::Split split) {
  return [=](Rng& rng) { return sim::sample_scenario(task, split, rng); };
}

Eigen::MatrixXd random_rows(int n, int d, Rng& rng) {
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

Eigen::MatrixXd column(const std::vector<double>& v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

PairSet goal_pairs(sim::Split split, int n, Rng& rng) {
  PairSet p;
  std::vector<sim::WorldState> starts;
  for (int i = 0; i < n; ++i) starts.push_back(sim::sample_scenario(sim::TaskKind::RevealPick, split, rng));
  p.inputs = theory::feature_rows(starts);
  p.targets.resize(n, 4);
  for (int i = 0; i < n; ++i) p.targets.row(i) = theory::goal_coords(theory::goal_state(starts[static_cast<std::size_t>(i)]));
  return p;
}

}  // namespace

TEST_CASE("rollouts of composed operators") {
  const auto s = sampler(sim::TaskKind::RevealPick, sim::Split::OOD);
  const auto start = rollout_states(no_op_policy(), s, 0, 50, 3);
  SUBCASE("horizon zero returns the sampled starts") {
    const auto oracle0 = rollout_states(oracle_reduction_policy(), s, 0, 50, 3);
    for (std::size_t i = 0; i < start.size(); ++i)
      CHECK(sim::state_vector(oracle0[i]) == sim::state_vector(start[i]));
  }
  SUBCASE("the no-op policy is the identity") {
    const auto later = rollout_states(no_op_policy(), s, 4, 50, 3);
    for (std::size_t i = 0; i < start.size(); ++i)
      CHECK(sim::state_vector(later[i]) == sim::state_vector(start[i]));
  }
  SUBCASE("the scripted reduction uncovers the target") {
    const auto set = rollout_samples(oracle_reduction_policy(), s, 4, 50, 3);
    CHECK(set.n() == 50);
    for (int i = 0; i < set.n(); ++i) CHECK(set.vectors(i, 4) == 0.0);
    const auto raw = to_samples(start);
    for (int i = 0; i < raw.n(); ++i) CHECK(raw.vectors(i, 4) == 1.0);
  }
  SUBCASE("property: parallel and serial rollouts agree") {
    for (const auto task : sim::kAllTasks) {
      const auto a = rollout_states(oracle_reduction_policy(), sampler(task, sim::Split::OOD), 3, 64, 17);
      const auto b = rollout_states_serial(oracle_reduction_policy(), sampler(task, sim::Split::OOD), 3, 64, 17);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(sim::state_vector(a[i]) == sim::state_vector(b[i]));
    }
  }
}

TEST_CASE("covariance trace") {
  Eigen::MatrixXd m(2, 2);
  m << 0, 0, 2, 0;
  CHECK(cov_trace(m) == 1.0);
  Eigen::MatrixXd k(4, 2);
  k << 1, 1, 1, -1, -1, 1, -1, -1;
  CHECK(cov_trace(k) == 2.0);
  CHECK(cov_trace(Eigen::MatrixXd::Constant(5, 3, 0.4)) == 0.0);

  Rng rng(4);
  const auto r = random_rows(200, 5, rng);
  SUBCASE("property: translation invariant") {
    Eigen::RowVectorXd shift(5);
    shift << 3, -1, 0.5, 10, -7;
    CHECK(cov_trace(r.rowwise() + shift) == doctest::Approx(cov_trace(r)).epsilon(1e-12));
  }
  SUBCASE("property: scales with the square of the factor") {
    CHECK(cov_trace(2.0 * r) == 4.0 * cov_trace(r));
    CHECK(cov_trace(0.5 * r) == 0.25 * cov_trace(r));
  }
}

TEST_CASE("anchor condition") {
  Rng rng(5);
  SampleSet wide{random_rows(100, 3, rng), {}};
  SampleSet tight{0.1 * random_rows(100, 3, rng), {}};
  CHECK(is_anchor(tight, wide));
  CHECK_FALSE(is_anchor(wide, tight));
  CHECK_FALSE(is_anchor(wide, wide));
  SampleSet other{random_rows(100, 4, rng), {}};
  CHECK_THROWS(is_anchor(other, wide));
}

TEST_CASE("empirical gap") {
  Rng rng(6);
  SUBCASE("the same sample set has zero gap") {
    PairSet p{random_rows(50, 3, rng), random_rows(50, 2, rng)};
    const Predictor f = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(x.head(2) * 0.3); };
    CHECK(empirical_gap(f, p, p, 1.0).gap == 0.0);
  }
  SUBCASE("a constant predictor on constant targets has zero loss") {
    PairSet a{random_rows(30, 3, rng), Eigen::MatrixXd::Constant(30, 1, 0.25)};
    PairSet b{random_rows(80, 3, rng), Eigen::MatrixXd::Constant(80, 1, 0.25)};
    const Predictor f = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Constant(1, 0.25); };
    const auto g = empirical_gap(f, a, b, 1.0);
    CHECK(g.gap == 0.0);
    CHECK(g.empirical_loss == 0.0);
  }
  SUBCASE("mean loss by hand") {
    PairSet p{Eigen::MatrixXd::Zero(2, 1), column({1.0, 3.0})};
    const Predictor f = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    CHECK(mean_loss(f, p) == 5.0);
  }
  SUBCASE("a predictor fit in distribution generalizes worse to shifted starts") {
    const auto train = goal_pairs(sim::Split::InDist, 50, rng);
    const auto in = goal_pairs(sim::Split::InDist, 500, rng);
    const auto ood = goal_pairs(sim::Split::OOD, 500, rng);
    const auto ridge = learn::Ridge::fit(train.inputs, train.targets, 1e-3);
    const Predictor f = [&](const Eigen::VectorXd& x) { return ridge.predict(x); };
    const double B = ridge.weights.norm();
    CHECK(empirical_gap(f, train, ood, B).gap > empirical_gap(f, train, in, B).gap);
  }
}

TEST_CASE("rademacher complexity of the linear class") {
  Eigen::MatrixXd one(1, 2);
  one << 3, 4;
  CHECK(rademacher_linear(one, 1.0) == 5.0);
  CHECK(gap_bound(one, 1.0) == 10.0);
  Eigen::MatrixXd two(2, 2);
  two << 1, 0, 0, 1;
  CHECK(rademacher_linear(two, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS(rademacher_linear(one, 0.0));
  CHECK_THROWS(rademacher_linear(one, -1.0));

  Rng rng(7);
  const auto r = random_rows(300, 4, rng);
  SUBCASE("property: matches the closed form") {
    double sq = 0.0;
    for (int i = 0; i < r.rows(); ++i)
      for (int j = 0; j < r.cols(); ++j) sq += r(i, j) * r(i, j);
    CHECK(rademacher_linear(r, 1.7) == doctest::Approx(1.7 / 300.0 * std::sqrt(sq)).epsilon(1e-12));
  }
  SUBCASE("property: homogeneous in B and in the inputs") {
    CHECK(rademacher_linear(r, 3.0) == doctest::Approx(3.0 * rademacher_linear(r, 1.0)).epsilon(1e-12));
    CHECK(rademacher_linear(2.5 * r, 1.0) == doctest::Approx(2.5 * rademacher_linear(r, 1.0)).epsilon(1e-12));
  }
  SUBCASE("doubling n shrinks it by about 1/sqrt(2)") {
    const auto a = random_rows(1000, 4, rng);
    const auto b = random_rows(2000, 4, rng);
    const double ratio = rademacher_linear(b, 1.0) / rademacher_linear(a, 1.0);
    CHECK(std::abs(ratio - 1.0 / std::sqrt(2.0)) <= 0.1 / std::sqrt(2.0));
  }
  SUBCASE("variance surrogate") {
    Eigen::MatrixXd m(2, 1);
    m << 0, 2;
    CHECK(variance_surrogate(m, 3.0) == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-15));
  }
}

TEST_CASE("binned mutual information") {
  Rng rng(8);
  SUBCASE("independent variables carry about zero bits") {
    const auto x = random_rows(20000, 1, rng);
    const auto y = random_rows(20000, 1, rng);
    CHECK(mi_binned(x, y, 4) < 0.01);
  }
  SUBCASE("a copied balanced bit carries one bit") {
    const auto x = column({0, 1, 0, 1, 1, 0, 1, 0});
    CHECK(mi_binned(x, x, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("the sign of a symmetric variable carries one bit") {
    std::vector<double> xs{-1.0, 1.0}, ys{-1.0, 1.0};
    for (int i = 0; i < 999; ++i) {
      const double v = rng.uniform(-1.0, 1.0);
      xs.push_back(v);
      xs.push_back(-v);
      ys.push_back(v < 0 ? -1.0 : 1.0);
      ys.push_back(-v < 0 ? -1.0 : 1.0);
    }
    CHECK(mi_binned(column(xs), column(ys), 8) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("property: symmetric and non-negative") {
    const auto x = random_rows(500, 2, rng);
    Eigen::MatrixXd y = x.col(0) + 0.3 * random_rows(500, 1, rng);
    CHECK(mi_binned(x, y, 5) == doctest::Approx(mi_binned(y, x, 5)).epsilon(1e-12));
    CHECK(mi_binned(x, y, 5) >= 0.0);
  }
  SUBCASE("constant inputs carry nothing") {
    const auto x = random_rows(100, 2, rng);
    CHECK(mi_binned(x, Eigen::MatrixXd::Constant(100, 1, 3.0), 8) == 0.0);
  }
  SUBCASE("conditioning on the variable itself removes the information") {
    const auto x = random_rows(500, 1, rng);
    CHECK(mi_binned(x, x, x, 4) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("joint cells") {
    Eigen::MatrixXd m(3, 2);
    m << 0, 5, 1, 5, 0, 5;
    const auto cells = joint_cells(m, 2);
    CHECK(cells[0] == cells[2]);
    CHECK(cells[0] != cells[1]);
  }
}

TEST_CASE("data processing check") {
  CHECK(dpi_check(MIReport{1.0, 1.04, 8, 10}));
  CHECK_FALSE(dpi_check(MIReport{1.0, 1.06, 8, 10}));
  Rng rng(9);
  const auto s0 = random_rows(2000, 2, rng);
  // A samplewise map of S0 cannot exceed I(S0; S0 | G).
  Eigen::MatrixXd sa = (s0.array() > 0.0).cast<double>();
  const auto goal = random_rows(2000, 1, rng);
  const auto r = mi_report(s0, s0, sa, goal, 8);
  CHECK(r.i_s0_sa <= r.i_s0_sb);
  CHECK(dpi_check(s0, s0, sa, goal, 8));
}
