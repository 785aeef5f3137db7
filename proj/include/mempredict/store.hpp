#pragma once

#include <filesystem>
#include <string>

#include "mempredict/pipeline.hpp"

namespace mempredict {

/// Layout: <dir>/CURRENT names the live snapshot directory, which holds
/// manifest.json, encoder.json, window.json and one model-<method>.json per
/// method. A snapshot is fully written under a temporary name before it is
/// renamed into place and CURRENT is swapped, so readers see old or new.
std::filesystem::path persist_model_set(const ModelSet& set, const std::filesystem::path& store_dir);

/// Throws NotFound when no snapshot was ever published, VersionMismatch for a
/// foreign schema, StoreCorrupt for anything unreadable or inconsistent.
ModelSet load_model_set(const std::filesystem::path& store_dir);

/// Hex FNV-1a of the canonical config serialization.
std::string config_hash(const PipelineConfig& config);

}  // namespace mempredict
