#pragma once

// Monte Carlo estimators for the generalization-gap argument: composed
// transition operators sampled by rollout, covariance-trace spread, empirical
// gap, linear-class Rademacher complexity, and plug-in (conditional) mutual
// information with a data-processing check.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "anchor/rng.hpp"
#include "anchor/rollout.hpp"
#include "anchor/sim.hpp"

namespace anchor::gap {

struct SampleMeta {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  sim::Split split = sim::Split::OOD;
  std::string policy = "none";
  int horizon = 0;
};

struct SampleSet {
  Eigen::MatrixXd vectors;  // n x d
  SampleMeta meta;

  int n() const { return static_cast<int>(vectors.rows()); }
  int d() const { return static_cast<int>(vectors.cols()); }
};

/// One policy step; nullopt is a no-op.
using Policy = std::function<std::optional<sim::ActionPrimitive>(const sim::WorldState&,
                                                                  const sim::Observation&)>;
using InitialSampler = std::function<sim::WorldState(Rng&)>;

/// Row i is the state after `horizon` policy steps from the i-th sampled
/// start. Row i only depends on (seed, i), so the parallel and serial
/// versions return identical matrices.
std::vector<sim::WorldState> rollout_states(const Policy& policy, const InitialSampler& sampler, int horizon,
                                            int n, std::uint64_t seed);
std::vector<sim::WorldState> rollout_states_serial(const Policy& policy, const InitialSampler& sampler,
                                                   int horizon, int n, std::uint64_t seed);
SampleSet rollout_samples(const Policy& policy, const InitialSampler& sampler, int horizon, int n,
                          std::uint64_t seed, SampleMeta meta = {});
SampleSet to_samples(const std::vector<sim::WorldState>& states, SampleMeta meta = {});

Policy no_op_policy();
Policy oracle_reduction_policy();
/// The learned reduction loop as a Markov policy: act only while the score is
/// at or above the threshold.
Policy learned_reduction_policy(const rollout::Models& models);

/// Population (1/n) covariance trace.
double cov_trace(const Eigen::MatrixXd& rows);
inline double cov_trace(const SampleSet& s) { return cov_trace(s.vectors); }
bool is_anchor(const SampleSet& anchor, const SampleSet& initial);

struct GapReport {
  double expected_loss = 0.0;
  double empirical_loss = 0.0;
  double gap = 0.0;
  double tr_sigma = 0.0;
  double rademacher = 0.0;
  double bound = 0.0;
  double surrogate = 0.0;  // B sqrt(tr Sigma) / sqrt(n)
  int n = 0;
  double B = 0.0;
};

/// Inputs and desired outputs, one sample per row.
struct PairSet {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

using Predictor = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using Loss = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

double squared_loss(const Eigen::VectorXd& predicted, const Eigen::VectorXd& target);
double mean_loss(const Predictor& f, const PairSet& pairs, const Loss& loss = squared_loss);

/// expected_loss over `test`, empirical_loss over `train`. The spread and
/// Rademacher fields describe the training inputs with weight norm B.
GapReport empirical_gap(const Predictor& f, const PairSet& train, const PairSet& test, double B,
                        const Loss& loss = squared_loss);

/// (B / n) sqrt(sum_i ||s_i||^2)
double rademacher_linear(const Eigen::MatrixXd& rows, double B);
/// 2 * rademacher_linear
double gap_bound(const Eigen::MatrixXd& rows, double B);
/// B sqrt(tr Sigma) / sqrt(n)
double variance_surrogate(const Eigen::MatrixXd& rows, double B);

struct MIReport {
  double i_s0_sb = 0.0;  // bits
  double i_s0_sa = 0.0;  // bits
  int bins = 0;
  int n = 0;
};

inline constexpr double kMiSlack = 0.05;

/// Plug-in mutual information in bits from per-dimension equal-width bins;
/// with `cond`, averaged over conditioning cells weighted by their mass.
double mi_binned(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int bins);
double mi_binned(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd& cond, int bins);

MIReport mi_report(const Eigen::MatrixXd& s0, const Eigen::MatrixXd& sb, const Eigen::MatrixXd& sa,
                   const Eigen::MatrixXd& goal, int bins);
bool dpi_check(const MIReport& report, double slack = kMiSlack);
bool dpi_check(const Eigen::MatrixXd& s0, const Eigen::MatrixXd& sb, const Eigen::MatrixXd& sa,
               const Eigen::MatrixXd& goal, int bins, double slack = kMiSlack);

/// Equal-width bin index of every row, one joint cell id per row. Constant
/// columns fall into bin 0.
std::vector<int> joint_cells(const Eigen::MatrixXd& rows, int bins);

}  // namespace anchor::gap
