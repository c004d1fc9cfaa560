#include "qsearch/retrieval/expansion.hpp"

#include <set>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::retrieval {

std::string_view to_string(Dimension d) {
    switch (d) {
    case Dimension::ContentMastery:
        return "content mastery";
    case Dimension::KeyElements:
        return "key elements";
    case Dimension::ContextualAnalysis:
        return "contextual analysis";
    case Dimension::ExtendedThinking:
        return "extended thinking";
    case Dimension::Verbatim:
        return "verbatim";
    }
    return "verbatim";
}

void to_json(nlohmann::json& j, const RetrievalQuery& q) {
    j = nlohmann::json{{"text", q.text}, {"origin_subquery", q.origin_subquery}, {"dimension", to_string(q.dimension)}};
}

namespace {

std::optional<std::vector<std::string>> parse_questions(std::string_view reply) {
    auto j = parse_lenient_json(reply);
    if (!j) {
        return std::nullopt;
    }
    if (j->is_object()) {
        for (const char* key : {"questions", "Questions", "queries"}) {
            if (j->contains(key)) {
                *j = (*j)[key];
                break;
            }
        }
    }
    if (!j->is_array()) {
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& item : *j) {
        if (item.is_string()) {
            out.push_back(item.get<std::string>());
        }
    }
    return out;
}

} // namespace

std::vector<RetrievalQuery> expand_query(std::string_view sub_query, int origin_subquery, gateway::Gateway& gw,
                                         const PipelineConfig& cfg, Diagnostics* diag) {
    const std::string verbatim = utf8::normalize_space(sub_query);
    if (verbatim.empty()) {
        throw ContractViolation("expand_query: sub-query must be non-empty");
    }
    std::vector<RetrievalQuery> out{{verbatim, origin_subquery, Dimension::Verbatim}};
    if (cfg.expansion_count == 0) {
        return out;
    }
    const std::string prompt = prompts::fill(prompts::template_text(prompts::kQueryExpansion),
                                             {{"Count", std::to_string(cfg.expansion_count)}, {"Sub-Query", verbatim}});
    const std::string reply = gw.chat_complete(
        gateway::ChatRequest{std::string(prompts::kQueryExpansion), verbatim, prompt}, gateway::GenerationParams{});
    const auto questions = parse_questions(reply);
    if (!questions) {
        warn(diag, "retrieval", "unparseable query expansion for \"" + verbatim + "\"; searching verbatim only");
        return out;
    }
    std::set<std::string> seen{utf8::to_lower(verbatim)};
    static constexpr Dimension kDims[] = {Dimension::ContentMastery, Dimension::KeyElements,
                                          Dimension::ContextualAnalysis, Dimension::ExtendedThinking};
    for (const auto& q : *questions) {
        if (static_cast<int>(out.size()) - 1 >= cfg.expansion_count) {
            break;
        }
        std::string text = utf8::normalize_space(q);
        if (text.empty() || !seen.insert(utf8::to_lower(text)).second) {
            continue;
        }
        out.push_back({std::move(text), origin_subquery, kDims[(out.size() - 1) % 4]});
    }
    return out;
}

} // namespace qsearch::retrieval
