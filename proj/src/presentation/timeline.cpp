#include "qsearch/presentation/timeline.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"
#include "qsearch/gateway/parsed_call.hpp"

namespace qsearch::presentation {

using nlohmann::json;

namespace {

constexpr int kEventAttempts = 2;
constexpr std::size_t kEventWorkers = 8;
constexpr std::size_t kTitleWords = 8;

std::string field(const json& j, std::string_view name) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (utf8::to_lower(it.key()) == name && !it.value().is_null()) {
            return utf8::normalize_space(json_text(it.value()));
        }
    }
    return {};
}

std::string leading_words(const std::string& text, std::size_t n) {
    std::istringstream in(text);
    std::string out;
    std::string w;
    for (std::size_t i = 0; i < n && in >> w; ++i) {
        out += (i == 0 ? "" : " ") + w;
    }
    return out;
}

std::optional<std::size_t> event_ref(const json& v, std::size_t count) {
    long n = 0;
    if (v.is_number_integer()) {
        n = v.get<long>();
    } else if (v.is_string()) {
        std::string s = v.get<std::string>();
        s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == '[' || c == ']' || c == ' '; }),
                s.end());
        try {
            std::size_t used = 0;
            n = std::stol(s, &used);
            if (used != s.size()) {
                return std::nullopt;
            }
        } catch (const std::exception&) {
            return std::nullopt;
        }
    } else {
        return std::nullopt;
    }
    if (n < 1 || static_cast<std::size_t>(n) > count) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(n - 1);
}

std::optional<json> parse_groups(std::string_view reply) {
    auto j = parse_lenient_json(reply);
    if (!j) {
        return std::nullopt;
    }
    if (j->is_object()) {
        for (auto it = j->begin(); it != j->end(); ++it) {
            if (utf8::to_lower(it.key()) == "groups") {
                j = it.value();
                break;
            }
        }
    }
    if (!j->is_array()) {
        return std::nullopt;
    }
    return j;
}

std::vector<TimelineEvent> sorted_events(std::vector<TimelineEvent> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.timestamp < b.timestamp; });
    return events;
}

} // namespace

std::string_view to_string(TimeSource s) { return s == TimeSource::Passage ? "passage" : "report_time"; }

void to_json(json& j, const TimelineEvent& e) {
    j = json{{"timestamp", e.timestamp.iso()},
             {"title", e.title},
             {"summary", e.summary},
             {"source_passage", {{"doc_index", e.doc_index}, {"char_range", {e.char_range.start, e.char_range.end}}}},
             {"time_source", to_string(e.time_source)}};
}

void to_json(json& j, const TimelineGroup& g) {
    j = json{{"label", g.label}, {"keywords", g.keywords}, {"events", g.events}};
}

std::optional<EventDraft> parse_event(std::string_view reply) {
    const auto j = parse_lenient_json(reply);
    if (!j || !j->is_object()) {
        return std::nullopt;
    }
    EventDraft d{field(*j, "time"), field(*j, "title"), field(*j, "summary")};
    if (d.title.empty()) {
        d.title = leading_words(d.summary, kTitleWords);
    }
    if (d.title.empty()) {
        return std::nullopt;
    }
    return d;
}

std::vector<TimelineEvent> extract_events(const std::vector<Passage>& passages,
                                          const std::map<int, std::optional<Timestamp>>& report_times,
                                          gateway::Gateway& gw, Diagnostics* diag) {
    std::vector<std::optional<TimelineEvent>> slots(passages.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < passages.size(); i = next++) {
            const Passage& p = passages[i];
            const std::string text = utf8::normalize_space(p.text);
            if (text.empty()) {
                continue;
            }
            std::optional<Timestamp> report;
            if (const auto it = report_times.find(p.parent_doc); it != report_times.end()) {
                report = it->second;
            }
            const std::string prompt =
                prompts::fill(prompts::template_text(prompts::kTimelineEvent),
                              {{"Report Time", report ? report->iso() : "unknown"}, {"Passage", text}});
            std::optional<EventDraft> draft;
            try {
                draft = gateway::complete_parsed(gw, {std::string(prompts::kTimelineEvent), text, prompt},
                                                 gateway::judge_params(), kEventAttempts, parse_event);
            } catch (const Error& e) {
                warn(diag, "timeline", std::string("event extraction failed: ") + e.what());
                continue;
            }
            if (!draft) {
                warn(diag, "timeline", "unparseable event for a passage of document " + std::to_string(p.parent_doc));
                continue;
            }
            TimelineEvent ev;
            ev.title = draft->title;
            ev.summary = draft->summary;
            ev.doc_index = p.parent_doc;
            ev.char_range = p.char_range;
            if (const auto t = draft->time.empty() ? std::nullopt : Timestamp::parse(draft->time)) {
                ev.timestamp = *t;
                ev.time_source = TimeSource::Passage;
            } else if (report) {
                ev.timestamp = *report;
                ev.time_source = TimeSource::ReportTime;
            } else {
                continue;
            }
            slots[i] = std::move(ev);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t workers = std::min(kEventWorkers, passages.size());
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(work);
    }
    for (auto& t : pool) {
        t.join();
    }
    std::vector<TimelineEvent> out;
    for (auto& s : slots) {
        if (s) {
            out.push_back(std::move(*s));
        }
    }
    return out;
}

std::vector<std::size_t> merge_order(const std::vector<TimelineEvent>& events, const std::vector<Embedding>& embs,
                                     double threshold) {
    if (embs.size() != events.size()) {
        throw ContractViolation("merge_order: one embedding per event is required");
    }
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return events[a].timestamp < events[b].timestamp; });
    std::vector<std::size_t> kept;
    for (const std::size_t i : order) {
        const bool distinct = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return cosine_similarity(embs[i], embs[k]) <= threshold;
        });
        if (distinct) {
            kept.push_back(i);
        }
    }
    return kept;
}

std::vector<TimelineEvent> merge_events(const std::vector<TimelineEvent>& events, gateway::Gateway& gw,
                                        const PipelineConfig& cfg) {
    if (events.empty()) {
        return {};
    }
    std::vector<std::string> texts;
    texts.reserve(events.size());
    for (const auto& e : events) {
        texts.push_back(e.title + " " + e.summary);
    }
    const auto embs = gw.embed(texts);
    std::vector<TimelineEvent> out;
    for (const std::size_t i : merge_order(events, embs, cfg.timeline_merge_threshold)) {
        out.push_back(events[i]);
    }
    return out;
}

std::vector<TimelineGroup> repair_grouping(const std::vector<TimelineEvent>& events, const json& proposal) {
    std::vector<bool> claimed(events.size(), false);
    std::vector<TimelineGroup> groups;
    if (proposal.is_array()) {
        for (const auto& g : proposal) {
            if (!g.is_object()) {
                continue;
            }
            TimelineGroup group;
            group.label = field(g, "label");
            for (auto it = g.begin(); it != g.end(); ++it) {
                const std::string key = utf8::to_lower(it.key());
                if (key == "keywords" && it.value().is_array()) {
                    for (const auto& k : it.value()) {
                        auto kw = utf8::normalize_space(json_text(k));
                        if (!kw.empty()) {
                            group.keywords.push_back(std::move(kw));
                        }
                    }
                } else if (key == "events" && it.value().is_array()) {
                    for (const auto& ref : it.value()) {
                        const auto idx = event_ref(ref, events.size());
                        if (idx && !claimed[*idx]) {
                            claimed[*idx] = true;
                            group.events.push_back(events[*idx]);
                        }
                    }
                }
            }
            if (group.events.empty()) {
                continue;
            }
            if (group.label.empty()) {
                group.label = group.keywords.empty() ? "Group " + std::to_string(groups.size() + 1)
                                                     : group.keywords.front();
            }
            groups.push_back(std::move(group));
        }
    }
    TimelineGroup other{"Other", {}, {}};
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!claimed[i]) {
            other.events.push_back(events[i]);
        }
    }
    if (!other.events.empty()) {
        groups.push_back(std::move(other));
    }
    for (auto& g : groups) {
        g.events = sorted_events(std::move(g.events));
    }
    std::stable_sort(groups.begin(), groups.end(), [](const TimelineGroup& a, const TimelineGroup& b) {
        return a.events.front().timestamp < b.events.front().timestamp;
    });
    return groups;
}

std::vector<TimelineGroup> group_events(const std::vector<TimelineEvent>& input, std::string_view query,
                                        gateway::Gateway& gw, Diagnostics* diag) {
    if (input.empty()) {
        return {};
    }
    const auto events = sorted_events(input);
    std::string listing;
    for (std::size_t i = 0; i < events.size(); ++i) {
        listing += (i == 0 ? "" : "\n") + ("[" + std::to_string(i + 1) + "] (" + events[i].timestamp.iso() + ") ") +
                   events[i].title + ": " + events[i].summary;
    }
    const std::string q = utf8::normalize_space(query);
    const std::string prompt =
        prompts::fill(prompts::template_text(prompts::kTimelineGroup), {{"Query", q}, {"Events", listing}});
    std::optional<json> proposal;
    try {
        proposal = gateway::complete_parsed(gw, {std::string(prompts::kTimelineGroup), q, prompt},
                                            gateway::judge_params(), 1, parse_groups);
    } catch (const Error& e) {
        warn(diag, "timeline", std::string("event grouping failed: ") + e.what());
    }
    if (!proposal) {
        warn(diag, "timeline", "unparseable event grouping; using a single group");
        return {TimelineGroup{"Timeline", {}, events}};
    }
    return repair_grouping(events, *proposal);
}

} // namespace qsearch::presentation
