#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "ddp/intensity.hpp"

namespace ddp {

constexpr int kCheckpointVersion = 1;

// Model checkpoint as JSON: format version, kind, catalog, every raw
// parameter tensor as nested arrays with explicit dims, an optional config
// echo, a creation timestamp and an FNV-1a content hash over the parameter
// payload. Round-trips are lossless (shortest round-trip double printing).
nlohmann::json checkpoint_to_json(const ModelParams& model, const nlohmann::json& config_echo);
ModelParams checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const ModelParams& model, const nlohmann::json& config_echo);
ModelParams load_checkpoint(const std::string& path);

// ISO-8601 UTC timestamp; honors SOURCE_DATE_EPOCH so reruns can be
// byte-identical.
std::string creation_timestamp();

}  // namespace ddp
