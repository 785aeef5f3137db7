#pragma once

#include <cstdint>
#include <string_view>

#include <json.hpp>

#include "mempredict/featurization.hpp"
#include "mempredict/learners.hpp"
#include "mempredict/pipeline.hpp"

namespace mempredict {

using Json = nlohmann::ordered_json;

/// Config file keys; missing keys keep their defaults. Throws InvalidConfig
/// for unknown keys, wrong types, or values that fail validation.
PipelineConfig config_from_json(const Json& j);
Json to_json(const PipelineConfig& config);

Json to_json(const EncoderSnapshot& encoder);
EncoderSnapshot encoder_from_json(const Json& j);

Json to_json(const LearnerSpec& spec);
LearnerSpec spec_from_json(const Json& j);

/// Self-describing: carries the method, resolved hyperparameters, seed,
/// class list and every fitted number. Doubles round-trip exactly.
Json to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace mempredict
