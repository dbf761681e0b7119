#include "anchor/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace anchor::exp {

namespace {

template <class T>
void read(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto t : cfg.tasks) tasks.push_back(std::string(sim::to_string(t)));
  return {
      {"tasks", tasks},
      {"seeds", cfg.seeds},
      {"expert_demos", cfg.expert_demos},
      {"sweep_demos", cfg.sweep_demos},
      {"human_demos", cfg.human_demos},
      {"play_episodes", cfg.play_episodes},
      {"sigma_act", cfg.sigma_act},
      {"sigma_obs", cfg.sigma_obs},
      {"alpha", cfg.alpha},
      {"lambda_cls", cfg.lambda_cls},
      {"lambda_reg", cfg.lambda_reg},
      {"lambda_ridge", cfg.lambda_ridge},
      {"lambda_base", cfg.lambda_base},
      {"gd_iterations", cfg.gd_iterations},
      {"gd_step", cfg.gd_step},
      {"flow_k", cfg.flow_k},
      {"max_reductions", cfg.max_reductions},
      {"calibration_scenes", cfg.calibration_scenes},
      {"scenarios", cfg.scenarios},
      {"ood_fraction", cfg.ood_fraction},
      {"nesting_prob", cfg.nesting_prob},
      {"theory_samples", cfg.theory_samples},
      {"theory_test", cfg.theory_test},
      {"mi_samples", cfg.mi_samples},
      {"mi_bins", cfg.mi_bins},
      {"output_dir", cfg.output_dir},
  };
}

ExperimentConfig apply_json(const nlohmann::json& j, ExperimentConfig cfg) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  const nlohmann::json known = to_json(cfg);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw std::invalid_argument("unknown config key: " + key);

  if (j.contains("tasks")) {
    cfg.tasks.clear();
    for (const auto& t : j.at("tasks")) cfg.tasks.push_back(sim::parse_task(t.get<std::string>()));
  }
  read(j, "seeds", cfg.seeds);
  read(j, "expert_demos", cfg.expert_demos);
  read(j, "sweep_demos", cfg.sweep_demos);
  read(j, "human_demos", cfg.human_demos);
  read(j, "play_episodes", cfg.play_episodes);
  read(j, "sigma_act", cfg.sigma_act);
  read(j, "sigma_obs", cfg.sigma_obs);
  read(j, "alpha", cfg.alpha);
  read(j, "lambda_cls", cfg.lambda_cls);
  read(j, "lambda_reg", cfg.lambda_reg);
  read(j, "lambda_ridge", cfg.lambda_ridge);
  read(j, "lambda_base", cfg.lambda_base);
  read(j, "gd_iterations", cfg.gd_iterations);
  read(j, "gd_step", cfg.gd_step);
  read(j, "flow_k", cfg.flow_k);
  read(j, "max_reductions", cfg.max_reductions);
  read(j, "calibration_scenes", cfg.calibration_scenes);
  read(j, "scenarios", cfg.scenarios);
  read(j, "ood_fraction", cfg.ood_fraction);
  read(j, "nesting_prob", cfg.nesting_prob);
  read(j, "theory_samples", cfg.theory_samples);
  read(j, "theory_test", cfg.theory_test);
  read(j, "mi_samples", cfg.mi_samples);
  read(j, "mi_bins", cfg.mi_bins);
  read(j, "output_dir", cfg.output_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return apply_json(nlohmann::json::parse(in), std::move(base));
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
  if (tasks.empty()) fail("tasks must not be empty");
  if (std::set<sim::TaskKind>(tasks.begin(), tasks.end()).size() != tasks.size()) fail("tasks repeat");
  if (seeds.empty()) fail("seeds must not be empty");
  if (expert_demos < 1) fail("expert_demos must be >= 1");
  if (sweep_demos.empty()) fail("sweep_demos must not be empty");
  for (const int d : sweep_demos)
    if (d < 1) fail("sweep_demos entries must be >= 1");
  if (human_demos < 1) fail("human_demos must be >= 1");
  if (play_episodes < 1) fail("play_episodes must be >= 1");
  if (calibration_scenes < 1) fail("calibration_scenes must be >= 1");
  if (scenarios < 1) fail("scenarios must be >= 1");
  if (theory_samples < 1 || theory_test < 1 || mi_samples < 1) fail("theory sample counts must be >= 1");
  if (!(ood_fraction >= 0.0 && ood_fraction <= 1.0)) fail("ood_fraction must be in [0, 1]");
  if (!(nesting_prob >= 0.0 && nesting_prob <= 1.0)) fail("nesting_prob must be in [0, 1]");
  if (!(sigma_act >= 0.0) || !(sigma_obs >= 0.0)) fail("noise levels must be >= 0");
  if (!(lambda_cls >= 0.0) || !(lambda_reg >= 0.0)) fail("loss weights must be >= 0");
  if (!(lambda_ridge >= 0.0) || !(lambda_base >= 0.0)) fail("ridge penalties must be >= 0");
  if (gd_iterations < 0 || !(gd_step > 0.0)) fail("gradient descent settings out of range");
  if (flow_k < 1) fail("flow_k must be >= 1");
  if (max_reductions < 0) fail("max_reductions must be >= 0");
  if (mi_bins < 2) fail("mi_bins must be >= 2");
}

std::string ExperimentConfig::hash() const {
  nlohmann::json j = to_json(*this);
  j.erase("output_dir");  // where results go does not change them
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace anchor::exp
