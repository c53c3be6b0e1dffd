#pragma once

#include <string>

#include "json.hpp"
#include "sysrisk/risk_engine.hpp"

namespace sysrisk::cli {

// JSON readers for instance files. Every malformed input surfaces as
// Error(ParseError) or as the validation error of the component it feeds.

nlohmann::json read_json_file(const std::string& path);

SpacePtr parse_space(const nlohmann::json& j);
RandomVector parse_random_vector(const nlohmann::json& j, const SpacePtr& space);
Aggregation parse_aggregation(const nlohmann::json& j);
Acceptance parse_acceptance(const nlohmann::json& j, const SpacePtr& space);
MarketSet parse_market(const nlohmann::json& j, const SpacePtr& space, Index agents);
Instance parse_instance(const nlohmann::json& j);

Instance load_instance(const std::string& path);
RandomVector load_random_vector(const std::string& path, const SpacePtr& space);

/// Byte-stable rendering: insertion-ordered keys, doubles as %.17g,
/// non-finite numbers as null.
std::string dump_stable(const nlohmann::ordered_json& j, int indent = 2);

}  // namespace sysrisk::cli
