#include "anchor/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "anchor/datagen.hpp"

namespace anchor::theory {

namespace {

constexpr int kScriptBudget = 8;

std::vector<double> base_losses(const learn::BaseModel& base, const std::vector<sim::WorldState>& starts,
                                const std::vector<sim::WorldState>& references, std::uint64_t seed) {
  std::vector<double> out(starts.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < starts.size(); ++i) {
    Rng rng = Rng(seed).derive(i);
    out[i] = base_loss(base, starts[i], references[i], rng);
  }
  return out;
}

gap::GapReport report_from_losses(const std::vector<double>& train, const std::vector<double>& test,
                                  const Eigen::MatrixXd& inputs, double B) {
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  gap::GapReport r;
  r.expected_loss = mean(test);
  r.empirical_loss = mean(train);
  r.gap = r.expected_loss - r.empirical_loss;
  r.n = static_cast<int>(inputs.rows());
  r.B = B;
  r.tr_sigma = gap::cov_trace(inputs);
  r.rademacher = gap::rademacher_linear(inputs, B);
  r.bound = 2.0 * r.rademacher;
  r.surrogate = gap::variance_surrogate(inputs, B);
  return r;
}

Eigen::MatrixXd goal_rows(const std::vector<sim::WorldState>& starts) {
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const Eigen::VectorXd g = sim::state_vector(goal_state(starts[i]));
    if (i == 0) out.resize(static_cast<Eigen::Index>(starts.size()), g.size());
    out.row(static_cast<Eigen::Index>(i)) = g.transpose();
  }
  return out;
}

}  // namespace

sim::WorldState goal_state(const sim::WorldState& start) {
  Rng quiet(0);
  sim::WorldState s = start;
  s.env.sigma_act = 0.0;
  for (int step = 0; step < kScriptBudget; ++step) {
    const auto action = data::oracle_reduction_step(s);
    if (!action) break;
    s = sim::apply_primitive(s, *action, quiet).state;
  }
  for (const auto& action : data::oracle_base_plan(s)) s = sim::apply_primitive(s, action, quiet).state;
  s.env = start.env;
  return s;
}

Eigen::VectorXd goal_coords(const sim::WorldState& state) {
  const auto& pose = state.object(sim::task_object(state)).pose;
  return Eigen::Vector4d(pose.x, pose.y, std::cos(pose.theta), std::sin(pose.theta));
}

double base_loss(const learn::BaseModel& base, const sim::WorldState& start, const sim::WorldState& reference,
                 Rng& rng) {
  sim::WorldState s = start;
  const auto plan = learn::predict_base(base, sim::observe(s, rng));
  for (const auto& action : plan) s = sim::apply_primitive(s, action, rng).state;
  return gap::squared_loss(goal_coords(s), goal_coords(goal_state(reference)));
}

Eigen::MatrixXd feature_rows(const std::vector<sim::WorldState>& states) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(states.size()), learn::kFeatureDim);
  for (std::size_t i = 0; i < states.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = learn::frame_observation(states[i], i).feature.transpose();
  return out;
}

gap::InitialSampler shifted_sampler(sim::TaskKind task, const exp::ExperimentConfig& cfg) {
  const sim::EnvParams env = cfg.env();
  const double q = cfg.nesting_prob;
  return [task, env, q](Rng& rng) { return sim::sample_scenario(task, sim::Split::OOD, rng, env, q); };
}

SpreadResult measure_spread(const exp::TaskBundle& bundle, const exp::ExperimentConfig& cfg, int n,
                            std::uint64_t seed) {
  const auto sampler = shifted_sampler(bundle.task, cfg);
  const std::uint64_t s = exp::stream(seed, "theory-spread", static_cast<std::uint64_t>(bundle.task));
  SpreadResult r;
  r.tr_sigma0 = gap::cov_trace(gap::rollout_samples(gap::no_op_policy(), sampler, 0, n, s));
  r.tr_sigma_a = gap::cov_trace(gap::rollout_samples(gap::learned_reduction_policy(bundle.models), sampler,
                                                     cfg.max_reductions, n, s));
  r.tr_sigma_oracle = gap::cov_trace(
      gap::rollout_samples(gap::oracle_reduction_policy(), sampler, cfg.max_reductions, n, s));
  return r;
}

TheoryResult run_theory(const exp::TaskBundle& bundle, const exp::ExperimentConfig& cfg, std::uint64_t seed) {
  TheoryResult r;
  r.task = bundle.task;
  r.seed = seed;
  r.n = cfg.theory_samples;
  const auto sampler = shifted_sampler(bundle.task, cfg);
  const auto learned = gap::learned_reduction_policy(bundle.models);
  const auto oracle = gap::oracle_reduction_policy();
  const int horizon = cfg.max_reductions;

  // Spread and gap on theory_samples starts.
  const std::uint64_t s_gap = exp::stream(seed, "theory-gap", static_cast<std::uint64_t>(bundle.task));
  const auto s0 = gap::rollout_states(gap::no_op_policy(), sampler, 0, cfg.theory_samples, s_gap);
  const auto sa = gap::rollout_states(learned, sampler, horizon, cfg.theory_samples, s_gap);
  const auto so = gap::rollout_states(oracle, sampler, horizon, cfg.theory_samples, s_gap);
  const auto S0 = gap::to_samples(s0, {bundle.task, sim::Split::OOD, "none", 0});
  const auto Sa = gap::to_samples(sa, {bundle.task, sim::Split::OOD, "learned", horizon});
  const auto So = gap::to_samples(so, {bundle.task, sim::Split::OOD, "oracle", horizon});
  r.tr_sigma0 = gap::cov_trace(S0);
  r.tr_sigma_a = gap::cov_trace(Sa);
  r.tr_sigma_oracle = gap::cov_trace(So);
  r.anchor_learned = gap::is_anchor(Sa, S0);
  r.anchor_oracle = gap::is_anchor(So, S0);

  std::vector<sim::WorldState> train;
  for (const auto& d : bundle.expert) train.push_back(d.start);
  const double B = bundle.models.base.weight_norm;
  const std::uint64_t s_loss = exp::stream(seed, "theory-loss", static_cast<std::uint64_t>(bundle.task));
  const auto train_losses = base_losses(bundle.models.base, train, train, s_loss);
  const auto test0 = base_losses(bundle.models.base, s0, s0, s_loss + 1);
  const auto testa = base_losses(bundle.models.base, sa, s0, s_loss + 2);
  r.gap0 = report_from_losses(train_losses, test0, feature_rows(s0), B);
  r.gap_a = report_from_losses(train_losses, testa, feature_rows(sa), B);

  // Information on mi_samples starts.
  const std::uint64_t s_mi = exp::stream(seed, "theory-mi", static_cast<std::uint64_t>(bundle.task));
  const auto m0 = gap::rollout_states(gap::no_op_policy(), sampler, 0, cfg.mi_samples, s_mi);
  const auto ma = gap::rollout_states(learned, sampler, horizon, cfg.mi_samples, s_mi);
  const auto mo = gap::rollout_states(oracle, sampler, horizon, cfg.mi_samples, s_mi);
  const Eigen::MatrixXd M0 = gap::to_samples(m0).vectors;
  const Eigen::MatrixXd goal = goal_rows(m0);
  r.mi_learned = gap::mi_report(M0, M0, gap::to_samples(ma).vectors, goal, cfg.mi_bins);
  r.mi_oracle = gap::mi_report(M0, M0, gap::to_samples(mo).vectors, goal, cfg.mi_bins);
  r.dpi_learned = gap::dpi_check(r.mi_learned);
  r.dpi_oracle = gap::dpi_check(r.mi_oracle);
  return r;
}

gap::GapReport designed_trial(std::uint64_t seed, int n_train, int n_test, double lambda) {
  exp::ExperimentConfig cfg;
  const auto sampler = shifted_sampler(sim::TaskKind::RevealPick, cfg);
  const auto draw = [&](std::uint64_t s, int n) {
    const auto states = gap::rollout_states(gap::no_op_policy(), sampler, 0, n, s);
    gap::PairSet p;
    p.inputs = feature_rows(states);
    p.targets.resize(n, 4);
    for (int i = 0; i < n; ++i) p.targets.row(i) = goal_coords(states[static_cast<std::size_t>(i)]).transpose();
    return p;
  };
  const gap::PairSet train = draw(exp::stream(seed, "designed-train"), n_train);
  const gap::PairSet test = draw(exp::stream(seed, "designed-test"), n_test);
  const learn::Ridge ridge = learn::Ridge::fit(train.inputs, train.targets, lambda);
  const gap::Predictor f = [&ridge](const Eigen::VectorXd& x) { return ridge.predict(x); };
  return gap::empirical_gap(f, train, test, ridge.weights.norm());
}

}  // namespace anchor::theory
