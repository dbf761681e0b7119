#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "anchor/learn.hpp"

namespace anchor::learn {

namespace {

Eigen::MatrixXd stack_rows(const std::vector<Eigen::VectorXd>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return X;
}

Eigen::VectorXd params_vector(const sim::ActionPrimitive& a) {
  return Eigen::Map<const Eigen::Vector4d>(a.p.data());
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

sim::ActionPrimitive make_primitive(sim::PrimitiveClass cls, const Eigen::VectorXd& p) {
  switch (cls) {
    case sim::PrimitiveClass::PickPlace:
      return sim::ActionPrimitive::pick_place({clamp01(p[0]), clamp01(p[1])},
                                              {clamp01(p[2]), clamp01(p[3])});
    case sim::PrimitiveClass::PushPull:
      return sim::ActionPrimitive::push_pull({clamp01(p[0]), clamp01(p[1])},
                                             {clamp01(p[2]), clamp01(p[3])});
    case sim::PrimitiveClass::Rotate:
      return sim::ActionPrimitive::rotate({clamp01(p[0]), clamp01(p[1])}, normalize_angle(p[2]));
  }
  return {};
}

Eigen::VectorXd with_bias(const Eigen::VectorXd& z) {
  Eigen::VectorXd out(z.size() + 1);
  out << z, 1.0;
  return out;
}

std::size_t nearest(const std::vector<Eigen::VectorXd>& keys, const Eigen::VectorXd& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double d = (keys[i] - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

int moved_track_near(const sim::Observation& obs, sim::ObjectClass cls, Vec2 near, bool& found) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& kp : obs.keypoints) {
    if (kp.cls != cls || kp.slot != sim::kBoundaryKeypoints) continue;
    const double d = distance(kp.point, near);
    if (d < best_d) {
      best_d = d;
      best = kp.track;
    }
  }
  found = best >= 0;
  return best;
}

}  // namespace

sim::Observation frame_observation(const sim::WorldState& state, std::uint64_t tag) {
  Rng rng(splitmix64(tag ^ 0x5bd1e995ULL));
  return sim::observe(state, rng);
}

// --- scoring -------------------------------------------------------------------

ScoreModel fit_score(std::span<const data::DemoVideo> demos, double lambda) {
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> labels;
  std::uint64_t tag = 0;
  for (const auto& demo : demos) {
    for (int t = 0; t < demo.length(); ++t) {
      rows.push_back(frame_observation(demo.states[static_cast<std::size_t>(t)], tag++).feature);
      labels.push_back(demo.score_labels.at(static_cast<std::size_t>(t)));
    }
  }
  if (rows.empty()) throw std::invalid_argument("fit_score: no frames");
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  const Ridge r = Ridge::fit(stack_rows(rows), y, lambda);
  ScoreModel m;
  m.weights = r.weights.col(0);
  m.lambda = lambda;
  m.weight_norm = m.weights.norm();
  return m;
}

double score(const ScoreModel& model, const sim::Observation& obs) {
  return model.weights.dot(obs.feature);
}

double calibrate_threshold(std::span<const double> anchor_scores,
                           std::span<const double> non_anchor_scores) {
  const double hi = percentile({anchor_scores.begin(), anchor_scores.end()}, 90.0);
  const double lo = percentile({non_anchor_scores.begin(), non_anchor_scores.end()}, 10.0);
  if (hi >= lo)
    throw CalibrationError("anchor scores do not separate from non-anchor scores (anchor p90 " +
                           std::to_string(hi) + " >= non-anchor p10 " + std::to_string(lo) + ")");
  return 0.5 * (hi + lo);
}

double calibrate_threshold(const ScoreModel& model, std::span<const sim::Observation> anchor,
                           std::span<const sim::Observation> non_anchor) {
  std::vector<double> a, n;
  for (const auto& o : anchor) a.push_back(score(model, o));
  for (const auto& o : non_anchor) n.push_back(score(model, o));
  return calibrate_threshold(a, n);
}

// --- flow generation -------------------------------------------------------------

FlowGenerator fit_flow(std::span<const data::DemoVideo> demos, int k) {
  if (k < 1) throw std::invalid_argument("fit_flow: k must be >= 1");
  FlowGenerator g;
  g.k = k;
  std::uint64_t tag = 1u << 20;
  for (const auto& demo : demos) {
    if (demo.segments.empty()) continue;
    const auto [first, last] = demo.segments.front();
    const std::span<const sim::WorldState> seg(demo.states.data() + first,
                                               static_cast<std::size_t>(last - first + 1));
    const auto moved = data::moving_objects(seg);
    if (moved.empty()) continue;
    FlowMemoryEntry e;
    e.feature = frame_observation(demo.states.front(), tag++).feature;
    e.flow = data::segment_flow(demo, 0);
    e.anchor_centroid = e.flow.frame_centroid(e.flow.frames - 1);
    e.moved_class = demo.states.front().object(moved.front()).spec.cls;
    g.memory.push_back(std::move(e));
  }
  return g;
}

data::PointFlow predict_flow(const FlowGenerator& generator, const sim::Observation& obs) {
  if (generator.memory.empty()) throw std::invalid_argument("predict_flow: empty flow memory");
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < generator.memory.size(); ++i)
    order.emplace_back((generator.memory[i].feature - obs.feature).squaredNorm(), i);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const auto retarget = [&](const FlowMemoryEntry& e) {
    const Vec2 start = e.flow.frame_centroid(0);
    bool found = false;
    const int track = moved_track_near(obs, e.moved_class, start, found);
    if (!found) return e.flow;
    return data::translate_flow(e.flow, track_centroid(obs, track) - start);
  };

  const auto& first = generator.memory[order.front().second];
  data::PointFlow out = retarget(first);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(generator.k), order.size());
  if (k == 1) return out;
  int used = 1;
  for (std::size_t j = 1; j < k; ++j) {
    const auto& e = generator.memory[order[j].second];
    if (e.flow.points != out.points || e.flow.frames != out.frames) continue;
    const data::PointFlow f = retarget(e);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += f.data[i];
    ++used;
  }
  for (double& v : out.data) v /= used;
  return out;
}

// --- reduction policy -----------------------------------------------------------

Eigen::VectorXd flow_descriptor(const data::PointFlow& flow) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(kDescriptorDim);
  d[6] = 1.0;
  if (flow.empty() || flow.frames < 2) return d;
  const int last = flow.frames - 1;
  const Vec2 c0 = flow.frame_centroid(0);
  const Vec2 c1 = flow.frame_centroid(last);
  const double angle = procrustes_angle(flow.frame(0), flow.frame(last));
  double path = 0.0;
  for (int p = 0; p < flow.points; ++p)
    for (int f = 0; f < last; ++f) path += distance(flow.at(f, p), flow.at(f + 1, p));
  path /= flow.points;
  double lift = 0.0;
  for (int f = 1; f < last; ++f) {
    const double s = static_cast<double>(f) / last;
    lift = std::max(lift, flow.frame_centroid(f).y - (c0.y + s * (c1.y - c0.y)));
  }
  const Vec2 disp = c1 - c0;
  d << c0.x, c0.y, c1.x, c1.y, disp.x, disp.y, std::cos(angle), std::sin(angle), angle, path,
      norm(disp), lift;
  return d;
}

Eigen::VectorXd reduction_input(const data::PointFlow& flow, const sim::Observation& obs) {
  Eigen::VectorXd x(kDescriptorDim + kFeatureDim);
  x << flow_descriptor(flow), obs.feature;
  return x;
}

ReductionModel fit_reduction(std::span<const data::PlayRecord> play, const ReductionOptions& opts) {
  if (play.empty()) throw std::invalid_argument("fit_reduction: no play records");
  std::vector<Eigen::VectorXd> raw;
  std::vector<int> labels;
  std::array<int, sim::kNumPrimitiveClasses> counts{};
  for (const auto& r : play) {
    raw.push_back(reduction_input(r.flow, r.pre_observation));
    labels.push_back(static_cast<int>(r.primitive.cls));
    ++counts[static_cast<std::size_t>(labels.back())];
  }
  for (int c = 0; c < sim::kNumPrimitiveClasses; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw MissingClassError(std::string("play data has no ") +
                              std::string(sim::to_string(static_cast<sim::PrimitiveClass>(c))) +
                              " episodes");

  ReductionModel m;
  m.lambda_cls = opts.lambda_cls;
  m.lambda_reg = opts.lambda_reg;
  m.input = Standardizer::fit(stack_rows(raw));
  const auto n = static_cast<Eigen::Index>(raw.size());
  const Eigen::Index d = raw.front().size() + 1;
  Eigen::MatrixXd Z(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    Z.row(i) = with_bias(m.input.apply(raw[static_cast<std::size_t>(i)])).transpose();

  // Per-class parameter regressors; their error enters the composite loss as
  // a constant with respect to the classifier weights.
  double sq_err = 0.0;
  for (int c = 0; c < sim::kNumPrimitiveClasses; ++c) {
    std::vector<Eigen::VectorXd> xs, ys;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] != c) continue;
      xs.push_back(Z.row(i).transpose());
      ys.push_back(params_vector(play[static_cast<std::size_t>(i)].primitive));
    }
    const Eigen::MatrixXd X = stack_rows(xs), Y = stack_rows(ys);
    m.regressors[static_cast<std::size_t>(c)] = Ridge::fit(X, Y, opts.ridge_lambda);
    sq_err += (X * m.regressors[static_cast<std::size_t>(c)].weights - Y).squaredNorm();
  }
  const double mse = sq_err / static_cast<double>(n * 4);

  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(n, sim::kNumPrimitiveClasses);
  for (Eigen::Index i = 0; i < n; ++i) Y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  m.classifier = Eigen::MatrixXd::Zero(sim::kNumPrimitiveClasses, d);
  const auto composite = [&](const Eigen::MatrixXd& P) {
    double ce = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      ce -= std::log(std::max(P(i, labels[static_cast<std::size_t>(i)]), 1e-300));
    return opts.lambda_cls * ce / static_cast<double>(n) + opts.lambda_reg * mse;
  };
  const auto probs = [&] {
    Eigen::MatrixXd logits = Z * m.classifier.transpose();
    Eigen::MatrixXd P(n, sim::kNumPrimitiveClasses);
    for (Eigen::Index i = 0; i < n; ++i) P.row(i) = softmax(logits.row(i).transpose()).transpose();
    return P;
  };
  Eigen::MatrixXd P = probs();
  m.loss_history.reserve(static_cast<std::size_t>(opts.iterations) + 1);
  m.loss_history.push_back(composite(P));
  for (int it = 0; it < opts.iterations; ++it) {
    const Eigen::MatrixXd grad = opts.lambda_cls * (P - Y).transpose() * Z / static_cast<double>(n);
    m.classifier -= opts.step * grad;
    P = probs();
    m.loss_history.push_back(composite(P));
  }
  m.total_loss = m.loss_history.back();
  return m;
}

Eigen::VectorXd class_logits(const ReductionModel& model, const data::PointFlow& flow,
                             const sim::Observation& obs) {
  return model.classifier * with_bias(model.input.apply(reduction_input(flow, obs)));
}

sim::ActionPrimitive predict_primitive(const ReductionModel& model, const data::PointFlow& flow,
                                       const sim::Observation& obs) {
  const Eigen::VectorXd z = with_bias(model.input.apply(reduction_input(flow, obs)));
  const Eigen::VectorXd logits = model.classifier * z;
  Eigen::Index cls = 0;
  logits.maxCoeff(&cls);
  const Eigen::VectorXd p = model.regressors[static_cast<std::size_t>(cls)].predict(z);
  return make_primitive(static_cast<sim::PrimitiveClass>(cls), p);
}

// --- base policy ------------------------------------------------------------------

BaseModel fit_base(std::span<const data::ExpertDemo> demos, double lambda) {
  if (demos.empty()) throw std::invalid_argument("fit_base: no demonstrations");
  BaseModel m;
  m.task = demos.front().task;
  m.lambda = lambda;
  for (const auto& [obs, action] : demos.front().pairs) m.step_classes.push_back(action.cls);

  std::map<std::pair<int, int>, std::pair<std::vector<Eigen::VectorXd>, std::vector<Eigen::VectorXd>>> groups;
  for (const auto& demo : demos) {
    if (demo.task != m.task) throw std::invalid_argument("fit_base: mixed tasks");
    if (demo.pairs.size() != m.step_classes.size())
      throw std::invalid_argument("fit_base: demos disagree on step count");
    for (std::size_t s = 0; s < demo.pairs.size(); ++s) {
      const auto& [obs, action] = demo.pairs[s];
      auto& g = groups[{static_cast<int>(s), obs.instruction.value_or(-1)}];
      g.first.push_back(obs.feature);
      g.second.push_back(params_vector(action));
    }
  }
  double sq = 0.0;
  for (const auto& [key, g] : groups) {
    Ridge r = Ridge::fit_centered(stack_rows(g.first), stack_rows(g.second), lambda);
    sq += r.weights.squaredNorm();
    m.regressors.emplace(key, std::move(r));
  }
  m.weight_norm = std::sqrt(sq);
  return m;
}

sim::ActionPrimitive predict_base_step(const BaseModel& model, const sim::Observation& obs, int step) {
  if (step < 0 || step >= model.steps()) throw std::out_of_range("predict_base_step: bad step");
  auto it = model.regressors.find({step, obs.instruction.value_or(-1)});
  if (it == model.regressors.end()) it = model.regressors.lower_bound({step, -1});
  if (it == model.regressors.end() || it->first.first != step)
    throw std::out_of_range("predict_base_step: no regressor for step");
  return make_primitive(model.step_classes[static_cast<std::size_t>(step)], it->second.predict(obs.feature));
}

std::vector<sim::ActionPrimitive> predict_base(const BaseModel& model, const sim::Observation& obs) {
  std::vector<sim::ActionPrimitive> plan;
  for (int s = 0; s < model.steps(); ++s) plan.push_back(predict_base_step(model, obs, s));
  return plan;
}

// --- observation-to-action ablation ---------------------------------------------

NaiveModel fit_naive(std::span<const data::DemoVideo> demos, std::span<const data::PlayRecord> play) {
  if (play.empty()) throw std::invalid_argument("fit_naive: no play records");
  NaiveModel m;
  std::uint64_t tag = 1u << 21;
  for (const auto& demo : demos) {
    if (demo.segments.empty()) continue;
    const data::PointFlow target = data::segment_flow(demo, 0);
    if (target.empty()) continue;
    const data::PlayRecord* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& r : play) {
      if (r.flow.frames != target.frames || r.flow.points != target.points) continue;
      double d = 0.0;
      for (std::size_t i = 0; i < target.data.size(); ++i) {
        const double e = r.flow.data[i] - target.data[i];
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        best = &r;
      }
    }
    if (best == nullptr) continue;
    m.memory.emplace_back(frame_observation(demo.states.front(), tag++).feature, best->primitive);
  }
  return m;
}

sim::ActionPrimitive predict_naive(const NaiveModel& model, const sim::Observation& obs) {
  if (model.memory.empty()) throw std::invalid_argument("predict_naive: empty memory");
  std::vector<Eigen::VectorXd> keys;
  keys.reserve(model.memory.size());
  for (const auto& [k, a] : model.memory) keys.push_back(k);
  return model.memory[nearest(keys, obs.feature)].second;
}

}  // namespace anchor::learn
