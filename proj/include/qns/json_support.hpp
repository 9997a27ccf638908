#pragma once

#include <json.hpp>

#include "qns/noise.hpp"
#include "qns/transmon.hpp"

namespace qns {

nlohmann::json psd_to_json(const NoisePsdSpec& psd);
NoisePsdSpec psd_from_json(const nlohmann::json& j);

nlohmann::json transmon_to_json(const TransmonSpec& spec);
TransmonSpec transmon_from_json(const nlohmann::json& j);

}  // namespace qns
