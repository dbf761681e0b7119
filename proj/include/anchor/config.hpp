#pragma once

// JSON form of ExperimentConfig. Unknown keys are rejected so that typos do
// not silently fall back to defaults.

#include <string>

#include "json.hpp"

#include "anchor/experiment.hpp"

namespace anchor::exp {

nlohmann::json to_json(const ExperimentConfig& cfg);

/// Overlays the keys present in `j` on top of `base`.
ExperimentConfig apply_json(const nlohmann::json& j, ExperimentConfig base = {});

ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

}  // namespace anchor::exp
