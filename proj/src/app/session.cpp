#include "qsearch/app/session.hpp"

#include <map>

#include "qsearch/app/cache.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::app {

using nlohmann::json;

void to_json(json& j, const SearchSession& s) {
    json nodes = json::array();
    for (const auto& n : s.nodes) {
        nodes.push_back({{"node", n.node},
                         {"sub_query", n.sub_query},
                         {"retrieval_queries", n.retrieval_queries},
                         {"documents", n.documents},
                         {"context", n.context},
                         {"answer", n.answer ? json(*n.answer) : json(nullptr)}});
    }
    json documents = json::array();
    for (const auto& d : s.documents) {
        json dj = document_to_json(d, false);
        dj["excerpt"] = utf8::substr(d.clean_text, 0, std::min<std::size_t>(300, utf8::length(d.clean_text)));
        documents.push_back(std::move(dj));
    }
    json timings = json::object();
    for (const auto& t : s.timings) {
        timings[t.stage] = t.ms;
    }
    json warnings = json::array();
    for (const auto& w : s.warnings) {
        warnings.push_back({{"stage", w.stage}, {"message", w.message}});
    }
    j = json{{"schema_version", kSessionSchemaVersion},
             {"template_version", prompts::kTemplateVersion},
             {"session_id", s.session_id},
             {"created_at", s.created_at},
             {"query", s.query},
             {"chosen_option", s.chosen_option ? json(*s.chosen_option) : json(nullptr)},
             {"user_context", s.user_context},
             {"intent", s.intent ? json(*s.intent) : json(nullptr)},
             {"effective_query", s.effective_query},
             {"rewritten_query", s.rewritten_query},
             {"qdg", s.qdg ? json(*s.qdg) : json(nullptr)},
             {"qdg_attempts", s.qdg_attempts},
             {"qdg_degraded", s.qdg_degraded},
             {"nodes", nodes},
             {"documents", documents},
             {"final_answer", s.final_answer ? json(*s.final_answer) : json(nullptr)},
             {"citations", s.citations},
             {"timeline", s.timeline},
             {"images", s.images},
             {"timings", timings},
             {"wall_ms", s.wall_ms},
             {"warnings", warnings},
             {"status", s.status},
             {"error", s.error ? json{{"code", s.error->code}, {"message", s.error->message}} : json(nullptr)},
             {"config", s.config}};
}

json canonical_transcript(const json& session) {
    json out = session;
    for (const char* key : {"session_id", "created_at", "timings", "wall_ms"}) {
        out.erase(key);
    }
    return out;
}

std::string answer_markdown(const SearchSession& s) {
    if (!s.final_answer) {
        return {};
    }
    std::map<std::size_t, int> cited;
    for (const auto& c : s.citations) {
        if (c.doc_index) {
            cited[c.sentence_index] = *c.doc_index;
        }
    }
    const std::u32string text = utf8::decode(s.final_answer->text);
    std::u32string out;
    std::size_t pos = 0;
    for (const auto& sentence : s.final_answer->sentences) {
        const auto it = cited.find(sentence.index);
        if (it == cited.end()) {
            continue;
        }
        // Marker goes after the sentence's last visible character.
        std::size_t end = std::min(sentence.range.end, text.size());
        while (end > sentence.range.start && utf8::is_space(text[end - 1])) {
            --end;
        }
        out += text.substr(pos, end - pos);
        out += utf8::decode("[" + std::to_string(it->second) + "]");
        pos = end;
    }
    out += text.substr(std::min(pos, text.size()));
    std::string md = utf8::encode(out);
    if (!md.empty() && md.back() != '\n') {
        md.push_back('\n');
    }
    return md;
}

} // namespace qsearch::app
