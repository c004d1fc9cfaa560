#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/core/timestamp.hpp"
#include "qsearch/core/types.hpp"
#include "qsearch/gateway/gateway.hpp"

namespace qsearch::presentation {

enum class TimeSource { Passage, ReportTime };

std::string_view to_string(TimeSource s);

struct TimelineEvent {
    Timestamp timestamp = Timestamp::from_epoch_seconds(0);
    std::string title;
    std::string summary;
    int doc_index = 0;
    CharRange char_range;
    TimeSource time_source = TimeSource::Passage;
};

void to_json(nlohmann::json& j, const TimelineEvent& e);

struct TimelineGroup {
    std::string label;
    std::vector<std::string> keywords;
    std::vector<TimelineEvent> events;
};

void to_json(nlohmann::json& j, const TimelineGroup& g);

struct EventDraft {
    std::string time;
    std::string title;
    std::string summary;
};

std::optional<EventDraft> parse_event(std::string_view reply);

// One event per passage that has a time of its own or whose document has a
// report time; other passages are discarded. Output follows input order.
std::vector<TimelineEvent> extract_events(const std::vector<Passage>& passages,
                                          const std::map<int, std::optional<Timestamp>>& report_times,
                                          gateway::Gateway& gw, Diagnostics* diag = nullptr);

// Indices kept by the ascending-time greedy scan: an event survives iff its
// similarity to every kept event is at most `threshold`.
std::vector<std::size_t> merge_order(const std::vector<TimelineEvent>& events, const std::vector<Embedding>& embs,
                                     double threshold);

// Embeds "title summary" and drops later near-duplicates; sorted ascending.
std::vector<TimelineEvent> merge_events(const std::vector<TimelineEvent>& events, gateway::Gateway& gw,
                                        const PipelineConfig& cfg);

// Model-proposed grouping repaired into a partition: unknown indices are
// ignored, repeated events stay in their first group, orphans go to
// "Other". Groups are ordered by earliest event; unparseable output gives
// one group holding everything.
std::vector<TimelineGroup> group_events(const std::vector<TimelineEvent>& events, std::string_view query,
                                        gateway::Gateway& gw, Diagnostics* diag = nullptr);

std::vector<TimelineGroup> repair_grouping(const std::vector<TimelineEvent>& events, const nlohmann::json& proposal);

} // namespace qsearch::presentation
