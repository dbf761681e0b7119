#include "anchor/gap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "anchor/datagen.hpp"

namespace anchor::gap {

namespace {

sim::WorldState run_one(const Policy& policy, const InitialSampler& sampler, int horizon,
                        std::uint64_t seed, int i) {
  Rng rng = Rng(seed).derive(static_cast<std::uint64_t>(i));
  sim::WorldState s = sampler(rng);
  for (int t = 0; t < horizon; ++t) {
    const sim::Observation obs = sim::observe(s, rng);
    const auto action = policy(s, obs);
    if (!action) continue;
    s = sim::apply_primitive(s, *action, rng).state;
  }
  return s;
}

void check_counts(int horizon, int n) {
  if (n < 1) throw std::invalid_argument("rollout_samples: n must be >= 1");
  if (horizon < 0) throw std::invalid_argument("rollout_samples: horizon must be >= 0");
}

double entropy_bits(const std::unordered_map<std::int64_t, int>& counts, double total) {
  double h = 0.0;
  for (const auto& [cell, c] : counts) {
    const double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Plug-in I(X;Y) over the subset `rows` of precomputed cell ids.
double mi_cells(const std::vector<int>& xc, const std::vector<int>& yc, const std::vector<int>& rows) {
  std::unordered_map<std::int64_t, int> hx, hy, hxy;
  for (const int r : rows) {
    const auto i = static_cast<std::size_t>(r);
    ++hx[xc[i]];
    ++hy[yc[i]];
    ++hxy[(static_cast<std::int64_t>(xc[i]) << 32) | static_cast<std::uint32_t>(yc[i])];
  }
  const double n = static_cast<double>(rows.size());
  return entropy_bits(hx, n) + entropy_bits(hy, n) - entropy_bits(hxy, n);
}

}  // namespace

std::vector<sim::WorldState> rollout_states(const Policy& policy, const InitialSampler& sampler, int horizon,
                                            int n, std::uint64_t seed) {
  check_counts(horizon, n);
  std::vector<sim::WorldState> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_one(policy, sampler, horizon, seed, i);
  return out;
}

std::vector<sim::WorldState> rollout_states_serial(const Policy& policy, const InitialSampler& sampler,
                                                   int horizon, int n, std::uint64_t seed) {
  check_counts(horizon, n);
  std::vector<sim::WorldState> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(run_one(policy, sampler, horizon, seed, i));
  return out;
}

SampleSet to_samples(const std::vector<sim::WorldState>& states, SampleMeta meta) {
  if (states.empty()) throw std::invalid_argument("to_samples: no states");
  SampleSet s;
  s.meta = std::move(meta);
  const Eigen::VectorXd first = sim::state_vector(states.front());
  s.vectors.resize(static_cast<Eigen::Index>(states.size()), first.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Eigen::VectorXd v = sim::state_vector(states[i]);
    if (v.size() != first.size()) throw std::invalid_argument("to_samples: state dimension changed");
    s.vectors.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return s;
}

SampleSet rollout_samples(const Policy& policy, const InitialSampler& sampler, int horizon, int n,
                          std::uint64_t seed, SampleMeta meta) {
  meta.horizon = horizon;
  return to_samples(rollout_states(policy, sampler, horizon, n, seed), std::move(meta));
}

Policy no_op_policy() {
  return [](const sim::WorldState&, const sim::Observation&) { return std::optional<sim::ActionPrimitive>{}; };
}

Policy oracle_reduction_policy() {
  return [](const sim::WorldState& s, const sim::Observation&) { return data::oracle_reduction_step(s); };
}

Policy learned_reduction_policy(const rollout::Models& models) {
  return [&models](const sim::WorldState&, const sim::Observation& obs) -> std::optional<sim::ActionPrimitive> {
    if (learn::score(models.score, obs) < models.threshold) return std::nullopt;
    return learn::predict_primitive(models.reduction, learn::predict_flow(models.flow, obs), obs);
  };
}

double cov_trace(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 1) throw std::invalid_argument("cov_trace: no samples");
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  return (rows.rowwise() - mean).squaredNorm() / static_cast<double>(rows.rows());
}

bool is_anchor(const SampleSet& anchor, const SampleSet& initial) {
  if (anchor.d() != initial.d()) throw std::invalid_argument("is_anchor: dimension mismatch");
  return cov_trace(anchor) < cov_trace(initial);
}

double squared_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target) {
  return (predicted - target).squaredNorm();
}

double mean_loss(const Predictor& f, const PairSet& pairs, const Loss& loss) {
  const Eigen::Index n = pairs.inputs.rows();
  if (n == 0 || pairs.targets.rows() != n) throw std::invalid_argument("mean_loss: bad pair set");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    total += loss(f(pairs.inputs.row(i).transpose()), pairs.targets.row(i).transpose());
  return total / static_cast<double>(n);
}

GapReport empirical_gap(const Predictor& f, const PairSet& train, const PairSet& test, double B,
                        const Loss& loss) {
  GapReport r;
  r.expected_loss = mean_loss(f, test, loss);
  r.empirical_loss = mean_loss(f, train, loss);
  r.gap = r.expected_loss - r.empirical_loss;
  r.n = static_cast<int>(train.inputs.rows());
  r.B = B;
  r.tr_sigma = cov_trace(train.inputs);
  r.rademacher = rademacher_linear(train.inputs, B);
  r.bound = 2.0 * r.rademacher;
  r.surrogate = variance_surrogate(train.inputs, B);
  return r;
}

double rademacher_linear(const Eigen::MatrixXd& rows, double B) {
  if (rows.rows() < 1) throw std::invalid_argument("rademacher_linear: no samples");
  if (!(B > 0.0)) throw std::invalid_argument("rademacher_linear: B must be > 0");
  return B / static_cast<double>(rows.rows()) * std::sqrt(rows.squaredNorm());
}

double gap_bound(const Eigen::MatrixXd& rows, double B) { return 2.0 * rademacher_linear(rows, B); }

double variance_surrogate(const Eigen::MatrixXd& rows, double B) {
  return B * std::sqrt(cov_trace(rows)) / std::sqrt(static_cast<double>(rows.rows()));
}

std::vector<int> joint_cells(const Eigen::MatrixXd& rows, int bins) {
  if (bins < 2) throw std::invalid_argument("joint_cells: bins must be >= 2");
  const Eigen::Index n = rows.rows();
  const Eigen::RowVectorXd lo = rows.colwise().minCoeff();
  const Eigen::RowVectorXd hi = rows.colwise().maxCoeff();
  std::map<std::vector<int>, int> ids;
  std::vector<int> out(static_cast<std::size_t>(n));
  std::vector<int> key(static_cast<std::size_t>(rows.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const double w = hi[j] - lo[j];
      int b = 0;
      if (w > 0.0) b = std::min(bins - 1, static_cast<int>((rows(i, j) - lo[j]) / w * bins));
      key[static_cast<std::size_t>(j)] = b;
    }
    const auto [it, inserted] = ids.emplace(key, static_cast<int>(ids.size()));
    out[static_cast<std::size_t>(i)] = it->second;
  }
  return out;
}

double mi_binned(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int bins) {
  if (x.rows() != y.rows() || x.rows() == 0) throw std::invalid_argument("mi_binned: sample counts differ");
  std::vector<int> all(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return mi_cells(joint_cells(x, bins), joint_cells(y, bins), all);
}

double mi_binned(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& cond, int bins) {
  if (x.rows() != y.rows() || x.rows() != cond.rows() || x.rows() == 0)
    throw std::invalid_argument("mi_binned: sample counts differ");
  const auto xc = joint_cells(x, bins);
  const auto yc = joint_cells(y, bins);
  const auto zc = joint_cells(cond, bins);
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < zc.size(); ++i) groups[zc[i]].push_back(static_cast<int>(i));
  double total = 0.0;
  for (const auto& [cell, rows] : groups)
    total += static_cast<double>(rows.size()) * mi_cells(xc, yc, rows);
  return total / static_cast<double>(x.rows());
}

MIReport mi_report(const Eigen::MatrixXd& s0, const Eigen::MatrixXd& sb, const Eigen::MatrixXd& sa,
                   const Eigen::MatrixXd& goal, int bins) {
  MIReport r;
  r.i_s0_sb = mi_binned(s0, sb, goal, bins);
  r.i_s0_sa = mi_binned(s0, sa, goal, bins);
  r.bins = bins;
  r.n = static_cast<int>(s0.rows());
  return r;
}

bool dpi_check(const MIReport& report, double slack) { return report.i_s0_sa <= report.i_s0_sb + slack; }

bool dpi_check(const Eigen::MatrixXd& s0, const Eigen::MatrixXd& sb, const Eigen::MatrixXd& sa,
               const Eigen::MatrixXd& goal, int bins, double slack) {
  return dpi_check(mi_report(s0, sb, sa, goal, bins), slack);
}

}  // namespace anchor::gap
