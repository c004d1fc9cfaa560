#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/diagnostics.hpp"
#include "qsearch/core/timestamp.hpp"
#include "qsearch/gateway/gateway.hpp"

namespace qsearch::preproc {

inline constexpr std::array<std::string_view, 11> kRefusalCategories{
    "illegal content",
    "ethical violations",
    "privacy breaches",
    "harmful intent",
    "professional consultations",
    "human-AI interactions",
    "misinformation",
    "technical inquiries",
    "academic requests",
    "planning and consulting inquiries",
    "creative content generation",
};

inline constexpr std::string_view kRefusalMessage =
    "Sorry, this request cannot be answered by the search assistant.";

struct IntentAnalysis {
    bool refusal = false;
    std::optional<std::string> refusal_category;
    bool needs_clarification = false;
    std::optional<std::string> clarification_prompt;
    std::vector<std::string> options;
};

// Wire shape: the two model JSON objects merged, plus "message" on refusal.
nlohmann::json to_wire(const IntentAnalysis& a);
void to_json(nlohmann::json& j, const IntentAnalysis& a);
void from_json(const nlohmann::json& j, IntentAnalysis& a);

struct UserContext {
    Timestamp local_time = Timestamp::from_epoch_seconds(0);
    int utc_offset_minutes = 0;
    std::optional<std::string> location;
    std::string language = "en";

    // "2025-02-05T10:00:00+08:00"
    std::string local_time_iso() const;
    // Local calendar date, "2025-02-05".
    std::string local_date() const;

    // Parses an ISO local time with optional zone offset; nullopt if invalid.
    static std::optional<UserContext> at(std::string_view local_time, std::optional<std::string> location = {});
    // Server clock in UTC.
    static UserContext now(std::optional<std::string> location = {});
};

void to_json(nlohmann::json& j, const UserContext& c);
void from_json(const nlohmann::json& j, UserContext& c);

// Maps a free-form category reply onto the closed category set.
std::string normalize_category(std::string_view raw);

// Safety check, then (when not refused) clarification check. Unparseable
// replies are retried twice and then fail open.
IntentAnalysis analyze_intent(std::string_view query, gateway::Gateway& gw, Diagnostics* diag = nullptr);

// Resolves relative time and implicit place; echoes the query when the
// model reply is empty.
std::string rewrite_query(std::string_view query, const UserContext& ctx, gateway::Gateway& gw,
                          Diagnostics* diag = nullptr);

// The query after the user picked a clarification option: "query (option)".
std::string apply_clarification(std::string_view query, std::string_view option);

} // namespace qsearch::preproc
