#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace qsearch {

// Parses model output that is "mostly JSON": strips code fences and prose
// around the first balanced object/array, accepts Python dict literals
// (single quotes, True/False/None) and trailing commas.
std::optional<nlohmann::json> parse_lenient_json(std::string_view text);

// Interprets "Yes"/"No", "true"/"false", "True"/"False", 1/0 and booleans.
std::optional<bool> lenient_bool(const nlohmann::json& value);

// Returns the string value or the dumped JSON for non-strings.
std::string json_text(const nlohmann::json& value);

} // namespace qsearch
