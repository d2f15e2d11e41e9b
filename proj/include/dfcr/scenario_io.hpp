#pragma once

#include <filesystem>
#include <string>

#include "dfcr/core_model.hpp"
#include "json.hpp"

namespace dfcr {

nlohmann::json to_json(const SensorConfig& config);
SensorConfig sensor_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GroundTruthObject& obj);
GroundTruthObject object_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Scenario& scenario);
/// Missing truth labels are derived: objects 1.0, spoofed 0.0.
/// Throws ConfigInvalid on schema violations.
Scenario scenario_from_json(const nlohmann::json& j);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace dfcr
