#include "anchor/rollout.hpp"

#include "anchor/datagen.hpp"

namespace anchor::rollout {

namespace {

// A pick aimed at a corner no object can occupy; applying it is a no-op.
sim::ActionPrimitive idle_primitive() { return sim::ActionPrimitive::pick_place({0.0, 0.0}, {0.0, 0.0}); }

void run_base(const Components& parts, RolloutTrace& trace, sim::WorldState& state, Rng& rng) {
  sim::Observation obs = sim::observe(state, rng);
  const auto plan = parts.base(state, obs);
  for (const auto& action : plan) {
    trace.base_steps.push_back({obs, action});
    state = sim::apply_primitive(state, action, rng).state;
    obs = sim::observe(state, rng);
  }
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::BudgetExceeded: return "budget_exceeded";
    case Outcome::NoProgress: return "no_progress";
  }
  return "?";
}

RolloutTrace run_loop(const Components& parts, const LoopParams& params, const sim::WorldState& scene,
                      Rng& rng) {
  RolloutTrace trace;
  sim::WorldState state = scene;
  sim::Observation obs = sim::observe(state, rng);
  double current = parts.score(obs);

  while (current >= params.threshold) {
    if (static_cast<int>(trace.reduction_steps.size()) >= params.max_reductions) {
      trace.outcome = Outcome::BudgetExceeded;
      trace.final_state = std::move(state);
      return trace;
    }
    ReductionStep step;
    step.observation = obs;
    step.score_before = current;
    if (parts.flow) step.flow = parts.flow(state, obs);
    step.action = parts.reduce(state, step.flow, obs);
    state = sim::apply_primitive(state, step.action, rng).state;
    obs = sim::observe(state, rng);
    step.score_after = parts.score(obs);
    const double before = current;
    current = step.score_after;
    trace.reduction_steps.push_back(std::move(step));
    if (current >= params.threshold && current > before - params.progress_eps) {
      trace.outcome = Outcome::NoProgress;
      trace.final_state = std::move(state);
      return trace;
    }
  }

  run_base(parts, trace, state, rng);
  trace.outcome = sim::is_success(state) ? Outcome::Success : Outcome::Failure;
  trace.final_state = std::move(state);
  return trace;
}

Components learned_components(const Models& models) {
  Components c;
  c.score = [&models](const sim::Observation& o) { return learn::score(models.score, o); };
  c.flow = [&models](const sim::WorldState&, const sim::Observation& o) {
    return learn::predict_flow(models.flow, o);
  };
  c.reduce = [&models](const sim::WorldState&, const data::PointFlow& f, const sim::Observation& o) {
    return learn::predict_primitive(models.reduction, f, o);
  };
  c.base = [&models](const sim::WorldState&, const sim::Observation& o) {
    return learn::predict_base(models.base, o);
  };
  return c;
}

Components naive_components(const Models& models) {
  Components c = learned_components(models);
  c.flow = nullptr;
  c.reduce = [&models](const sim::WorldState&, const data::PointFlow&, const sim::Observation& o) {
    return learn::predict_naive(models.naive, o);
  };
  return c;
}

data::PointFlow oracle_flow(const sim::WorldState& state) {
  const auto action = data::oracle_reduction_step(state);
  if (!action) return {};
  Rng quiet(0);
  sim::WorldState exact = state;
  exact.env.sigma_act = 0.0;
  const auto result = sim::apply_primitive(exact, *action, quiet);
  std::vector<sim::WorldState> states{exact};
  for (auto& f : sim::interpolate_motion(exact, result, action->cls, data::kFramesPerSegment))
    states.push_back(std::move(f));
  const data::PointFlow raw = data::extract_flow(states);
  return raw.empty() ? raw : data::downsample_flow(raw);
}

Components oracle_components(const Models& models) {
  Components c = learned_components(models);
  c.flow = [](const sim::WorldState& s, const sim::Observation&) { return oracle_flow(s); };
  c.reduce = [](const sim::WorldState& s, const data::PointFlow&, const sim::Observation&) {
    const auto action = data::oracle_reduction_step(s);
    return action ? *action : idle_primitive();
  };
  return c;
}

RolloutTrace reset_rollout(const Models& models, const sim::WorldState& scene, int max_reductions,
                           Rng& rng) {
  const LoopParams params{models.threshold, max_reductions, 0.01};
  return run_loop(learned_components(models), params, scene, rng);
}

RolloutTrace direct_rollout(const learn::BaseModel& base, const sim::WorldState& scene, Rng& rng) {
  RolloutTrace trace;
  sim::WorldState state = scene;
  Components parts;
  parts.base = [&base](const sim::WorldState&, const sim::Observation& o) {
    return learn::predict_base(base, o);
  };
  run_base(parts, trace, state, rng);
  trace.outcome = sim::is_success(state) ? Outcome::Success : Outcome::Failure;
  trace.final_state = std::move(state);
  return trace;
}

RolloutTrace naive_rollout(const Models& models, const sim::WorldState& scene, int max_reductions,
                           Rng& rng) {
  const LoopParams params{models.threshold, max_reductions, 0.01};
  return run_loop(naive_components(models), params, scene, rng);
}

}  // namespace anchor::rollout
