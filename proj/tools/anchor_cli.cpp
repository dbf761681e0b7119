// Command-line front end: data generation, training, evaluation, the
// benchmark, the demo-count sweep, theory measurements and report rendering.
//
// Configuration precedence: command-line flags > --config file > defaults.
// ANCHOR_OUTPUT_ROOT replaces the default output directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "anchor/bench.hpp"
#include "anchor/config.hpp"
#include "anchor/io.hpp"

namespace fs = std::filesystem;
using namespace anchor;

namespace {

struct Flags {
  std::string config_path;
  std::string output;
  std::vector<std::string> tasks;
  std::vector<std::uint64_t> seeds;
  int scenarios = 0;
  int expert_demos = 0;
  int human_demos = 0;
  int play_episodes = 0;
  double sigma_act = 0.0;
  double sigma_obs = 0.0;
  double ood_fraction = 0.0;
  int max_reductions = 0;
  std::vector<int> sweep_demos;
};

void add_config_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", f.output, "output directory");
  cmd->add_option("--tasks", f.tasks, "task subset (PickPlace RevealPick RotatePlace MultiTask)");
  cmd->add_option("--seed,--seeds", f.seeds, "seed list");
  cmd->add_option("--scenarios", f.scenarios, "test scenarios per task");
  cmd->add_option("--expert-demos", f.expert_demos, "expert demos for the base policy");
  cmd->add_option("--human-demos", f.human_demos, "human demo videos per task");
  cmd->add_option("--play-episodes", f.play_episodes, "play records");
  cmd->add_option("--sigma-act", f.sigma_act, "actuation noise");
  cmd->add_option("--sigma-obs", f.sigma_obs, "observation noise");
  cmd->add_option("--ood-fraction", f.ood_fraction, "fraction of shifted scenarios");
  cmd->add_option("--max-reductions", f.max_reductions, "reduction budget");
  cmd->add_option("--sweep-demos", f.sweep_demos, "demo counts for the sweep");
}

exp::ExperimentConfig resolve(const CLI::App* cmd, const Flags& f) {
  exp::ExperimentConfig cfg;
  if (const char* root = std::getenv("ANCHOR_OUTPUT_ROOT"); root && *root) cfg.output_dir = root;
  if (!f.config_path.empty()) cfg = exp::load_config(f.config_path, cfg);

  nlohmann::json overlay = nlohmann::json::object();
  const auto set = [&](const char* flag, const char* key, const auto& value) {
    if (cmd->count(flag) > 0) overlay[key] = value;
  };
  set("--output", "output_dir", f.output);
  set("--tasks", "tasks", f.tasks);
  set("--seed", "seeds", f.seeds);
  set("--scenarios", "scenarios", f.scenarios);
  set("--expert-demos", "expert_demos", f.expert_demos);
  set("--human-demos", "human_demos", f.human_demos);
  set("--play-episodes", "play_episodes", f.play_episodes);
  set("--sigma-act", "sigma_act", f.sigma_act);
  set("--sigma-obs", "sigma_obs", f.sigma_obs);
  set("--ood-fraction", "ood_fraction", f.ood_fraction);
  set("--max-reductions", "max_reductions", f.max_reductions);
  set("--sweep-demos", "sweep_demos", f.sweep_demos);
  cfg = exp::apply_json(overlay, cfg);
  cfg.validate();
  return cfg;
}

fs::path seed_dir(const exp::ExperimentConfig& cfg, const char* kind, std::uint64_t seed) {
  return fs::path(cfg.output_dir) / kind / ("seed_" + std::to_string(seed));
}

void write_resolved_config(const fs::path& dir, const exp::ExperimentConfig& cfg) {
  nlohmann::json j = exp::to_json(cfg);
  j["config_hash"] = cfg.hash();
  io::write_file(dir / "config.json", j.dump(2) + "\n");
}

// --- subcommands ---------------------------------------------------------------

void cmd_generate(const exp::ExperimentConfig& cfg) {
  for (const auto seed : cfg.seeds) {
    const auto dir = seed_dir(cfg, "data", seed);
    io::save_dataset(dir, io::generate_dataset(cfg, seed));
    std::cout << "wrote " << dir.string() << "\n";
  }
}

void cmd_train(const exp::ExperimentConfig& cfg) {
  for (const auto seed : cfg.seeds) {
    const auto ds = io::load_dataset(seed_dir(cfg, "data", seed));
    const auto dir = seed_dir(cfg, "models", seed);
    fs::create_directories(dir);
    for (const auto task : cfg.tasks) {
      if (!ds.human.contains(task)) throw std::runtime_error("dataset lacks task " + std::string(sim::to_string(task)));
      exp::TaskBundle bundle;
      try {
        bundle = exp::fit_bundle(task, ds.config, seed, ds.human.at(task), ds.expert.at(task), ds.play);
      } catch (const learn::CalibrationError& e) {
        throw bench::BenchError("calibration_failure", std::string(sim::to_string(task)), seed, e.what());
      }
      const auto path = dir / (std::string(sim::to_string(task)) + ".model");
      io::save_models(path, task, bundle.models);
      std::cout << "wrote " << path.string() << " threshold=" << bundle.models.threshold << "\n";
    }
    write_resolved_config(dir, ds.config);
  }
}

void write_traces(const fs::path& dir, const exp::TaskBundle& bundle, exp::Method method,
                  const std::vector<exp::Scenario>& scenarios, int max_reductions, std::uint64_t seed) {
  fs::create_directories(dir);
  std::ofstream out(dir / (std::string(sim::to_string(bundle.task)) + "_" + std::string(exp::to_string(method)) +
                           "_seed" + std::to_string(seed) + ".rec"));
  for (const auto& sc : scenarios) {
    out << io::Record("scenario").set("index", sc.index).set("split", std::string(sim::to_string(sc.split))).line()
        << '\n';
    io::write_trace(out, exp::run_method(method, bundle, sc, max_reductions, seed));
  }
}

void cmd_eval(const exp::ExperimentConfig& cfg, bool traces) {
  bench::BenchResult result;
  result.config_hash = cfg.hash();
  const fs::path out = fs::path(cfg.output_dir) / "eval";
  for (const auto seed : cfg.seeds) {
    auto ds = io::load_dataset(seed_dir(cfg, "data", seed));
    for (const auto task : cfg.tasks) {
      exp::TaskBundle bundle;
      bundle.task = task;
      bundle.human = ds.human.at(task);
      bundle.expert = ds.expert.at(task);
      sim::TaskKind stored{};
      bundle.models = io::load_models(seed_dir(cfg, "models", seed) / (std::string(sim::to_string(task)) + ".model"),
                                      &stored);
      if (stored != task) throw io::FormatError("model file holds a different task");
      const auto scenarios = exp::make_scenarios(task, cfg.scenarios, cfg.ood_fraction, cfg, seed);
      for (const auto method : exp::kAllMethods) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto rows = bench::evaluate(bundle, method, static_cast<int>(bundle.expert.size()), scenarios,
                                          cfg.max_reductions, seed);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        result.scenarios.insert(result.scenarios.end(), rows.begin(), rows.end());
        result.rows.push_back(bench::aggregate(rows, ms, result.config_hash));
        std::vector<bench::ScenarioResult> ood;
        for (const auto& r : rows)
          if (r.split == sim::Split::OOD) ood.push_back(r);
        if (!ood.empty()) result.ood_rows.push_back(bench::aggregate(ood, ms, result.config_hash));
        if (traces) write_traces(out / "traces", bundle, method, scenarios, cfg.max_reductions, seed);
      }
    }
  }
  bench::write_outputs(out, "", result);
  std::cout << bench::rows_csv(result.rows);
}

void cmd_bench(const exp::ExperimentConfig& cfg) {
  const fs::path out = fs::path(cfg.output_dir) / "bench";
  bench::BenchResult result;
  try {
    bench::run_bench(cfg, result);
  } catch (...) {
    bench::write_outputs(out, "partial_", result);
    throw;
  }
  bench::write_outputs(out, "", result);
  write_resolved_config(out, cfg);
  std::cout << bench::rows_csv(result.rows);
}

void cmd_sweep(const exp::ExperimentConfig& cfg) {
  const fs::path out = fs::path(cfg.output_dir) / "sweep";
  bench::BenchResult result;
  try {
    bench::run_sweep(cfg, result);
  } catch (...) {
    bench::write_outputs(out, "partial_", result);
    throw;
  }
  bench::write_outputs(out, "", result);
  write_resolved_config(out, cfg);
  std::cout << bench::rows_csv(result.ood_rows);
}

void cmd_theory(const exp::ExperimentConfig& cfg) {
  const fs::path out = fs::path(cfg.output_dir) / "theory";
  bench::BenchResult result;
  result.config_hash = cfg.hash();
  result.theory = bench::run_theory_all(cfg);
  bench::write_outputs(out, "", result);
  write_resolved_config(out, cfg);
  for (const auto& r : result.theory) {
    std::cout << sim::to_string(r.task) << " seed=" << r.seed << " tr0=" << r.tr_sigma0 << " tr_a=" << r.tr_sigma_a
              << " tr_oracle=" << r.tr_sigma_oracle << " gap0=" << r.gap0.gap << " gap_a=" << r.gap_a.gap
              << " bound=" << r.gap_a.bound << " dpi=" << (r.dpi_learned && r.dpi_oracle ? "ok" : "violated")
              << "\n";
  }
}

void cmd_report(const fs::path& input) {
  const auto rows = bench::parse_rows_csv(io::read_file(input / "results.csv"));
  std::vector<bench::BenchRow> ood;
  if (fs::exists(input / "results_ood.csv")) ood = bench::parse_rows_csv(io::read_file(input / "results_ood.csv"));
  const std::string hash = rows.empty() ? std::string() : rows.front().config_hash;
  io::write_file(input / "report.md", bench::markdown_report(rows, ood, hash));
  if (!rows.empty()) io::write_file(input / "success.svg", bench::svg_bars(rows, "Success rate (" + hash + ")"));
  if (!ood.empty())
    io::write_file(input / "success_ood.svg", bench::svg_bars(ood, "Success rate, shifted scenarios (" + hash + ")"));
  std::cout << "wrote " << (input / "report.md").string() << "\n";
}

struct ErrorInfo {
  std::string kind;
  std::string message;
  std::string task;
  std::optional<std::uint64_t> seed;
};

int report_error(const std::string& command, const std::string& output_dir, const std::string& config_hash,
                 const ErrorInfo& e, int code) {
  nlohmann::json j{{"status", "error"}, {"command", command}, {"kind", e.kind}, {"message", e.message}};
  if (!e.task.empty()) j["task"] = e.task;
  if (e.seed) j["seed"] = *e.seed;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
  if (!output_dir.empty()) {
    try {
      io::write_file(fs::path(output_dir) / "error.json", j.dump(2) + "\n");
    } catch (...) {
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchor-state reduction benchmark"};
  app.require_subcommand(1);

  Flags flags;
  bool traces = false;
  std::string report_dir;
  std::vector<CLI::App*> configured;
  const auto sub = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    add_config_flags(c, flags);
    configured.push_back(c);
    return c;
  };
  sub("generate-data", "generate play, human and expert datasets per seed");
  sub("train", "fit all models from a generated dataset");
  sub("eval", "evaluate trained models on the scenario sets")->add_flag("--traces", traces, "write rollout traces");
  sub("bench", "data, training and evaluation of all methods, plus theory columns");
  sub("sweep", "direct baseline over demo counts against ReSET at the base count");
  sub("theory", "spread, gap and information measurements");
  auto* report = app.add_subcommand("report", "render markdown and plots from a results directory");
  report->add_option("input", report_dir, "directory holding results.csv")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (cmd == report) {
    try {
      cmd_report(report_dir);
      return 0;
    } catch (const std::exception& e) {
      return report_error(name, report_dir, "", {"report_failure", e.what(), "", std::nullopt}, 4);
    }
  }

  exp::ExperimentConfig cfg;
  try {
    cfg = resolve(cmd, flags);
  } catch (const std::exception& e) {
    const char* root = std::getenv("ANCHOR_OUTPUT_ROOT");
    return report_error(name, flags.output.empty() ? (root ? root : "") : flags.output, "",
                        {"invalid_config", e.what(), "", std::nullopt}, 2);
  }

  try {
    if (name == "generate-data") cmd_generate(cfg);
    else if (name == "train") cmd_train(cfg);
    else if (name == "eval") cmd_eval(cfg, traces);
    else if (name == "bench") cmd_bench(cfg);
    else if (name == "sweep") cmd_sweep(cfg);
    else if (name == "theory") cmd_theory(cfg);
    return 0;
  } catch (const bench::BenchError& e) {
    return report_error(name, cfg.output_dir, cfg.hash(), {e.kind, e.what(), e.task, e.seed},
                        e.kind == "calibration_failure" ? 3 : 4);
  } catch (const io::FormatError& e) {
    return report_error(name, cfg.output_dir, cfg.hash(), {"format_error", e.what(), "", std::nullopt}, 5);
  } catch (const std::exception& e) {
    return report_error(name, cfg.output_dir, cfg.hash(), {"runtime_error", e.what(), "", std::nullopt}, 4);
  }
}
