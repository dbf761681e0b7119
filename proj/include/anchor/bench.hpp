#pragma once

// Benchmark orchestration and report emission. Results are per-scenario
// records aggregated into rows keyed by (task, method, demos, seed).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "anchor/experiment.hpp"
#include "anchor/theory.hpp"

namespace anchor::bench {

/// One evaluated scenario.
struct ScenarioResult {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  exp::Method method = exp::Method::Reset;
  int demos = 0;
  std::uint64_t seed = 0;
  int scenario = 0;
  sim::Split split = sim::Split::InDist;
  rollout::Outcome outcome = rollout::Outcome::Failure;
  int reduction_steps = 0;

  bool success() const { return outcome == rollout::Outcome::Success; }
};

// Summary columns of one theory run.
struct TheoryColumns {
  double tr_sigma0 = 0.0;
  double tr_sigma_a = 0.0;
  double gap0 = 0.0;
  double gap_a = 0.0;
  double bound = 0.0;
  double mi_sb = 0.0;
  double mi_sa = 0.0;
};
TheoryColumns columns(const theory::TheoryResult& r);

struct BenchRow {
  sim::TaskKind task = sim::TaskKind::PickPlace;
  exp::Method method = exp::Method::Reset;
  int demos = 0;
  std::uint64_t seed = 0;
  int scenarios = 0;
  int successes = 0;
  double rate = 0.0;
  double mean_reduction_steps = 0.0;
  // Spread / gap / information columns; empty on sweep rows.
  std::optional<TheoryColumns> theory;
  double wall_ms = 0.0;
  std::string config_hash;
};

struct BenchResult {
  std::string config_hash;
  std::vector<ScenarioResult> scenarios;
  std::vector<BenchRow> rows;        // all scenarios
  std::vector<BenchRow> ood_rows;    // shifted scenarios only
  std::vector<theory::TheoryResult> theory;
};

/// Raised when a cell of the benchmark cannot be completed. Carries enough
/// context for a machine-readable error record.
struct BenchError : std::runtime_error {
  BenchError(std::string kind, std::string task, std::uint64_t seed, const std::string& message)
      : std::runtime_error(message), kind(std::move(kind)), task(std::move(task)), seed(seed) {}
  std::string kind;
  std::string task;
  std::uint64_t seed;
};

/// Aggregates per-scenario results; rate is exactly successes / scenarios.
BenchRow aggregate(const std::vector<ScenarioResult>& results, double wall_ms, const std::string& config_hash);

/// Evaluates one method of a fitted bundle over a scenario set in parallel.
std::vector<ScenarioResult> evaluate(const exp::TaskBundle& bundle, exp::Method method, int demos,
                                     const std::vector<exp::Scenario>& scenarios, int max_reductions,
                                     std::uint64_t seed);

/// Per seed and task: data, fitting, calibration, theory measurements and the
/// three methods on the scenario set. Results are appended to `out` as each
/// task completes, so a failure leaves the finished cells in place.
void run_bench(const exp::ExperimentConfig& cfg, BenchResult& out, bool with_theory = true);

/// Direct baseline at every sweep demo count plus ReSET at expert_demos, on
/// the same scenario sets.
void run_sweep(const exp::ExperimentConfig& cfg, BenchResult& out);

/// Theory measurements only.
std::vector<theory::TheoryResult> run_theory_all(const exp::ExperimentConfig& cfg);

// --- reports -------------------------------------------------------------------

extern const std::vector<std::string_view> kCsvHeader;
extern const std::vector<std::string_view> kScenarioCsvHeader;

std::string rows_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_rows_csv(std::string_view text);
std::string scenarios_csv(const std::vector<ScenarioResult>& results, const std::string& config_hash);
/// Drops the wall_ms column; what the determinism check compares.
std::string strip_timing(std::string_view csv);

std::string markdown_report(const std::vector<BenchRow>& rows, const std::vector<BenchRow>& ood_rows,
                            const std::string& config_hash);
/// Grouped bar chart of success rate per task, one bar per (method, demos),
/// averaged over seeds.
std::string svg_bars(const std::vector<BenchRow>& rows, const std::string& title);

/// Writes results.csv, results_ood.csv, scenarios.csv, theory.rec,
/// report.md and the bar charts under `dir` with file names prefixed by
/// `prefix`.
void write_outputs(const std::filesystem::path& dir, const std::string& prefix, const BenchResult& result);

}  // namespace anchor::bench
