#pragma once

#include <nlohmann/json.hpp>

#include "votestack/models.hpp"

namespace votestack {

// JSON conversions shared by the model container and the run config.
nlohmann::json preprocess_to_json(const PreprocessOptions& opts);
PreprocessOptions preprocess_from_json(const nlohmann::json& j);

nlohmann::json fingerprint_to_json(const Fingerprint& fp);
Fingerprint fingerprint_from_json(const nlohmann::json& j);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& kind_name, const nlohmann::json& j);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace votestack
