#include "qsearch/preproc/preproc.hpp"

#include <chrono>
#include <cstdio>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/text.hpp"
#include "qsearch/core/utf8.hpp"
#include "qsearch/gateway/parsed_call.hpp"

namespace qsearch::preproc {

using nlohmann::json;

namespace {

constexpr int kIntentAttempts = 3;

std::string yes_no(bool b) { return b ? "Yes" : "No"; }

std::optional<int> parse_offset_minutes(std::string_view s) {
    const auto t = s.find('T');
    if (t == std::string_view::npos) {
        return 0;
    }
    const auto tail = s.substr(t);
    if (tail.back() == 'Z') {
        return 0;
    }
    const auto sign = tail.find_last_of("+-");
    if (sign == std::string_view::npos) {
        return 0;
    }
    int h = 0;
    int m = 0;
    const std::string zone(tail.substr(sign + 1));
    if (std::sscanf(zone.c_str(), "%2d:%2d", &h, &m) < 1 && std::sscanf(zone.c_str(), "%2d%2d", &h, &m) < 1) {
        return std::nullopt;
    }
    return (tail[sign] == '-' ? -1 : 1) * (h * 60 + m);
}

struct Refusal {
    bool refused = false;
    std::string category;
};

std::optional<Refusal> parse_refusal(std::string_view reply) {
    auto j = parse_lenient_json(reply);
    if (!j || !j->is_object() || !j->contains("Refusal")) {
        return std::nullopt;
    }
    const auto flag = lenient_bool((*j)["Refusal"]);
    if (!flag) {
        return std::nullopt;
    }
    Refusal r{*flag, ""};
    if (r.refused && j->contains("Category")) {
        r.category = json_text((*j)["Category"]);
    }
    return r;
}

struct Clarification {
    bool needed = false;
    std::string prompt;
    std::vector<std::string> choices;
};

std::optional<Clarification> parse_clarification(std::string_view reply) {
    auto j = parse_lenient_json(reply);
    if (!j || !j->is_object() || !j->contains("Requires additional input")) {
        return std::nullopt;
    }
    const auto flag = lenient_bool((*j)["Requires additional input"]);
    if (!flag) {
        return std::nullopt;
    }
    Clarification c;
    c.needed = *flag;
    if (j->contains("Additional options") && (*j)["Additional options"].is_object()) {
        const auto& opts = (*j)["Additional options"];
        if (opts.contains("Prompt description")) {
            c.prompt = utf8::trim(json_text(opts["Prompt description"]));
        }
        if (opts.contains("Choices") && opts["Choices"].is_array()) {
            for (const auto& choice : opts["Choices"]) {
                auto text = utf8::normalize_space(json_text(choice));
                if (!text.empty()) {
                    c.choices.push_back(std::move(text));
                }
            }
        }
    }
    return c;
}

} // namespace

json to_wire(const IntentAnalysis& a) {
    json j{{"Refusal", yes_no(a.refusal)},
           {"Category", a.refusal_category.value_or("")},
           {"Requires additional input", yes_no(a.needs_clarification)},
           {"Additional options",
            {{"Prompt description", a.clarification_prompt.value_or("")}, {"Choices", a.options}}}};
    if (a.refusal) {
        j["message"] = kRefusalMessage;
    }
    return j;
}

void to_json(json& j, const IntentAnalysis& a) {
    j = json{{"refusal", a.refusal},
             {"refusal_category", a.refusal_category ? json(*a.refusal_category) : json(nullptr)},
             {"needs_clarification", a.needs_clarification},
             {"clarification_prompt", a.clarification_prompt ? json(*a.clarification_prompt) : json(nullptr)},
             {"options", a.options}};
}

void from_json(const json& j, IntentAnalysis& a) {
    a.refusal = j.value("refusal", false);
    if (j.contains("refusal_category") && j["refusal_category"].is_string()) {
        a.refusal_category = j["refusal_category"].get<std::string>();
    }
    a.needs_clarification = j.value("needs_clarification", false);
    if (j.contains("clarification_prompt") && j["clarification_prompt"].is_string()) {
        a.clarification_prompt = j["clarification_prompt"].get<std::string>();
    }
    a.options = j.value("options", std::vector<std::string>{});
}

std::string UserContext::local_time_iso() const {
    std::string s =
        Timestamp::from_epoch_seconds(local_time.epoch_seconds() + std::int64_t{utc_offset_minutes} * 60).iso();
    s.pop_back(); // 'Z'
    char zone[16];
    const int abs = utc_offset_minutes < 0 ? -utc_offset_minutes : utc_offset_minutes;
    std::snprintf(zone, sizeof zone, "%c%02d:%02d", utc_offset_minutes < 0 ? '-' : '+', abs / 60, abs % 60);
    return s + zone;
}

std::string UserContext::local_date() const { return local_time_iso().substr(0, 10); }

std::optional<UserContext> UserContext::at(std::string_view local_time, std::optional<std::string> location) {
    const auto ts = Timestamp::parse(local_time);
    const auto offset = parse_offset_minutes(utf8::trim(local_time));
    if (!ts || !offset) {
        return std::nullopt;
    }
    UserContext c;
    c.local_time = *ts;
    c.utc_offset_minutes = *offset;
    c.location = std::move(location);
    return c;
}

UserContext UserContext::now(std::optional<std::string> location) {
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch());
    UserContext c;
    c.local_time = Timestamp::from_epoch_seconds(secs.count());
    c.location = std::move(location);
    return c;
}

void to_json(json& j, const UserContext& c) {
    j = json{{"local_time", c.local_time_iso()},
             {"location", c.location ? json(*c.location) : json(nullptr)},
             {"language", c.language}};
}

void from_json(const json& j, UserContext& c) {
    std::optional<std::string> location;
    if (j.contains("location") && j["location"].is_string()) {
        location = j["location"].get<std::string>();
    }
    auto parsed = UserContext::at(j.at("local_time").get<std::string>(), location);
    if (!parsed) {
        throw ContractViolation("invalid local_time in user context");
    }
    c = *parsed;
    c.language = j.value("language", "en");
}

std::string normalize_category(std::string_view raw) {
    const std::string lowered = utf8::to_lower(utf8::trim(raw));
    for (std::size_t i = 0; i < kRefusalCategories.size(); ++i) {
        const std::string name = utf8::to_lower(kRefusalCategories[i]);
        if (lowered.find(name) != std::string::npos || lowered == "(" + std::to_string(i + 1) + ")" ||
            lowered == std::to_string(i + 1)) {
            return std::string(kRefusalCategories[i]);
        }
    }
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t i = 0; i < kRefusalCategories.size(); ++i) {
        const double s = text::jaccard(lowered, kRefusalCategories[i]);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return std::string(kRefusalCategories[best]);
}

IntentAnalysis analyze_intent(std::string_view query, gateway::Gateway& gw, Diagnostics* diag) {
    const std::string q = utf8::trim(query);
    if (q.empty()) {
        throw ContractViolation("analyze_intent: query must be non-empty");
    }
    IntentAnalysis out;
    const gateway::GenerationParams params = gateway::judge_params();

    const gateway::ChatRequest refusal_req{
        std::string(prompts::kIntentRefusal), q,
        prompts::fill(prompts::template_text(prompts::kIntentRefusal), {{"Query", q}})};
    const auto refusal = gateway::complete_parsed(gw, refusal_req, params, kIntentAttempts, parse_refusal);
    if (!refusal) {
        warn(diag, "preproc", "unparseable refusal analysis; proceeding with search");
    } else if (refusal->refused) {
        out.refusal = true;
        out.refusal_category = normalize_category(refusal->category);
        return out;
    }

    const gateway::ChatRequest clarify_req{
        std::string(prompts::kIntentClarify), q,
        prompts::fill(prompts::template_text(prompts::kIntentClarify), {{"Query", q}})};
    const auto clarify = gateway::complete_parsed(gw, clarify_req, params, kIntentAttempts, parse_clarification);
    if (!clarify) {
        warn(diag, "preproc", "unparseable clarification analysis; proceeding with search");
        return out;
    }
    if (clarify->needed && clarify->choices.empty()) {
        warn(diag, "preproc", "clarification requested without options; ignored");
        return out;
    }
    if (clarify->needed) {
        out.needs_clarification = true;
        out.clarification_prompt = clarify->prompt;
        out.options = clarify->choices;
    }
    return out;
}

std::string rewrite_query(std::string_view query, const UserContext& ctx, gateway::Gateway& gw, Diagnostics* diag) {
    const std::string q = utf8::trim(query);
    if (q.empty()) {
        throw ContractViolation("rewrite_query: query must be non-empty");
    }
    const std::string prompt = prompts::fill(prompts::template_text(prompts::kQueryRewrite),
                                             {{"Local Time", ctx.local_time_iso()},
                                              {"Location", ctx.location.value_or("unknown")},
                                              {"Query", q}});
    const std::string reply =
        gw.chat_complete(gateway::ChatRequest{std::string(prompts::kQueryRewrite), q, prompt}, gateway::judge_params());

    std::string line;
    for (std::size_t pos = 0; pos <= reply.size();) {
        auto eol = reply.find('\n', pos);
        if (eol == std::string::npos) {
            eol = reply.size();
        }
        line = utf8::trim(std::string_view(reply).substr(pos, eol - pos));
        if (!line.empty()) {
            break;
        }
        pos = eol + 1;
    }
    for (std::string_view prefix : {"Rewritten query:", "Rewritten Query:"}) {
        if (line.rfind(prefix, 0) == 0) {
            line = utf8::trim(std::string_view(line).substr(prefix.size()));
        }
    }
    if (line.size() >= 2 && (line.front() == '"' || line.front() == '\'') && line.back() == line.front()) {
        line = utf8::trim(std::string_view(line).substr(1, line.size() - 2));
    }
    if (line.empty()) {
        warn(diag, "preproc", "empty rewrite; using the original query");
        return q;
    }
    return line;
}

std::string apply_clarification(std::string_view query, std::string_view option) {
    const std::string q = utf8::trim(query);
    const std::string o = utf8::normalize_space(option);
    return o.empty() ? q : q + " (" + o + ")";
}

} // namespace qsearch::preproc
