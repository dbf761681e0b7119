#pragma once

// Learned components: scoring model, retrieval flow generator, flow-to-primitive
// reduction policy, behavior-cloned base policy, and the observation-to-action
// ablation. Everything is built on ridge least squares, softmax regression
// trained by full-batch gradient descent, and nearest-neighbor retrieval.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "anchor/datagen.hpp"
#include "anchor/features.hpp"
#include "anchor/flow.hpp"
#include "anchor/sim.hpp"

namespace anchor::learn {

// --- linear models -----------------------------------------------------------

struct Ridge {
  Eigen::MatrixXd weights;  // input_dim x output_dim
  double lambda = 0.0;
  // Set only by fit_centered: predictions are y_mean + W^T (x - x_mean).
  Eigen::VectorXd x_mean;
  Eigen::VectorXd y_mean;

  /// argmin_W ||X W - Y||^2 + lambda ||W||^2, rows of X are samples.
  static Ridge fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda);
  /// Same on column-centered data with an unpenalized intercept. Columns that
  /// are constant in training get zero weight.
  static Ridge fit_centered(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda);
  Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
  bool centered() const { return x_mean.size() > 0; }
  int input_dim() const { return static_cast<int>(weights.rows()); }
};

/// Column-wise z-scoring; constant columns are centered only.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// --- scoring -----------------------------------------------------------------

struct ScoreModel {
  Eigen::VectorXd weights;
  double lambda = 0.0;
  double weight_norm = 0.0;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ScoreModel fit_score(std::span<const data::DemoVideo> demos, double lambda);
double score(const ScoreModel& model, const sim::Observation& obs);

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Midpoint between the 90th percentile of anchor scores and the 10th
/// percentile of non-anchor scores. Throws CalibrationError if they invert.
double calibrate_threshold(std::span<const double> anchor_scores,
                           std::span<const double> non_anchor_scores);
double calibrate_threshold(const ScoreModel& model, std::span<const sim::Observation> anchor,
                           std::span<const sim::Observation> non_anchor);

// --- flow generation -----------------------------------------------------------

struct FlowMemoryEntry {
  Eigen::VectorXd feature;
  data::PointFlow flow;  // kFlowHorizon frames
  Vec2 anchor_centroid;  // where the moved object ended up
  sim::ObjectClass moved_class = sim::ObjectClass::Target;
};

struct FlowGenerator {
  std::vector<FlowMemoryEntry> memory;
  int k = 1;
};

FlowGenerator fit_flow(std::span<const data::DemoVideo> demos, int k = 1);
data::PointFlow predict_flow(const FlowGenerator& generator, const sim::Observation& obs);

// --- reduction policy ---------------------------------------------------------

/// (first centroid, last centroid, net displacement, rotation cos, sin, angle,
///  mean path length, displacement norm, lift excursion)
inline constexpr int kDescriptorDim = 12;
Eigen::VectorXd flow_descriptor(const data::PointFlow& flow);

struct ReductionOptions {
  double lambda_cls = 1.0;
  double lambda_reg = 10.0;
  double step = 0.1;
  int iterations = 2000;
  double ridge_lambda = 1e-6;
};

struct ReductionModel {
  Standardizer input;
  Eigen::MatrixXd classifier;  // 3 x (input_dim + 1), last column is the bias
  std::array<Ridge, sim::kNumPrimitiveClasses> regressors;
  double lambda_cls = 1.0;
  double lambda_reg = 10.0;
  std::vector<double> loss_history;  // composite loss per gradient step
  double total_loss = 0.0;
};

struct MissingClassError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Eigen::VectorXd reduction_input(const data::PointFlow& flow, const sim::Observation& obs);
ReductionModel fit_reduction(std::span<const data::PlayRecord> play, const ReductionOptions& opts = {});
Eigen::VectorXd class_logits(const ReductionModel& model, const data::PointFlow& flow,
                             const sim::Observation& obs);
sim::ActionPrimitive predict_primitive(const ReductionModel& model, const data::PointFlow& flow,
                                       const sim::Observation& obs);

// --- base policy ----------------------------------------------------------------

struct BaseModel {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  std::vector<sim::PrimitiveClass> step_classes;
  std::map<std::pair<int, int>, Ridge> regressors;  // (step, instruction) -> ridge
  double lambda = 0.0;
  double weight_norm = 0.0;

  int steps() const { return static_cast<int>(step_classes.size()); }
};

BaseModel fit_base(std::span<const data::ExpertDemo> demos, double lambda);
sim::ActionPrimitive predict_base_step(const BaseModel& model, const sim::Observation& obs, int step);
std::vector<sim::ActionPrimitive> predict_base(const BaseModel& model, const sim::Observation& obs);

// --- observation-to-action ablation -------------------------------------------

struct NaiveModel {
  std::vector<std::pair<Eigen::VectorXd, sim::ActionPrimitive>> memory;
};

/// Pairs each demo's initial observation with the play primitive whose flow is
/// closest in Frobenius norm to the demo's first-segment flow.
NaiveModel fit_naive(std::span<const data::DemoVideo> demos, std::span<const data::PlayRecord> play);
sim::ActionPrimitive predict_naive(const NaiveModel& model, const sim::Observation& obs);

/// Observation of a recorded frame, with noise drawn from a stream fixed by `tag`.
sim::Observation frame_observation(const sim::WorldState& state, std::uint64_t tag);

}  // namespace anchor::learn
