#include "qsearch/presentation/citations.hpp"

#include <algorithm>
#include <regex>

#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"
#include "qsearch/gateway/parsed_call.hpp"

namespace qsearch::presentation {

using nlohmann::json;

namespace {

constexpr int kExtractionAttempts = 2;

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i == 0 ? "" : std::string(sep)) + items[i];
    }
    return out;
}

std::vector<std::string>* field_for(EntitySet& e, std::string_view raw_key) {
    const std::string key = utf8::to_lower(utf8::normalize_space(raw_key));
    if (key == "time" || key == "times") {
        return &e.times;
    }
    if (key == "location" || key == "locations") {
        return &e.locations;
    }
    if (key == "person" || key == "persons") {
        return &e.persons;
    }
    if (key == "job title" || key == "job titles") {
        return &e.job_titles;
    }
    if (key == "number" || key == "numbers") {
        return &e.numbers;
    }
    return nullptr;
}

void lift(const json& value, std::vector<std::string>& out) {
    if (value.is_null()) {
        return;
    }
    if (value.is_array()) {
        for (const auto& v : value) {
            lift(v, out);
        }
        return;
    }
    std::string text = utf8::normalize_space(json_text(value));
    if (!text.empty() && std::find(out.begin(), out.end(), text) == out.end()) {
        out.push_back(std::move(text));
    }
}

std::string entity_line(const std::vector<std::string>& items) { return items.empty() ? "none" : join(items, ", "); }

} // namespace

bool EntitySet::empty() const noexcept {
    return times.empty() && locations.empty() && persons.empty() && job_titles.empty() && numbers.empty();
}

void to_json(json& j, const EntitySet& e) {
    j = json{{"times", e.times},
             {"locations", e.locations},
             {"persons", e.persons},
             {"job_titles", e.job_titles},
             {"numbers", e.numbers}};
}

std::optional<EntitySet> parse_entities(std::string_view reply) {
    const auto j = parse_lenient_json(reply);
    if (!j || !j->is_object()) {
        return std::nullopt;
    }
    EntitySet out;
    for (auto it = j->begin(); it != j->end(); ++it) {
        if (auto* field = field_for(out, it.key())) {
            lift(it.value(), *field);
        }
    }
    return out;
}

EntitySet extract_entities(std::string_view sentence, gateway::Gateway& gw, Diagnostics* diag) {
    const std::string s = utf8::normalize_space(sentence);
    if (s.empty()) {
        throw ContractViolation("extract_entities: sentence must be non-empty");
    }
    const std::string prompt =
        prompts::fill(prompts::template_text(prompts::kInfoExtraction),
                      {{"Few-Shot Examples", std::string(prompts::few_shot(prompts::kInfoExtraction))},
                       {"Sentence", "Sentence: " + s}});
    const auto parsed = gateway::complete_parsed(gw, {std::string(prompts::kInfoExtraction), s, prompt},
                                                 gateway::judge_params(), kExtractionAttempts, parse_entities);
    if (!parsed) {
        warn(diag, "citation", "unparseable entity extraction for \"" + s + "\"");
        return {};
    }
    return *parsed;
}

std::optional<int> parse_citation_reply(std::string_view reply, const std::vector<SourceDoc>& docs,
                                        Diagnostics* diag) {
    static const std::regex bracketed(R"(\[\s*(-?\d{1,3})\s*\])");
    static const std::regex bare(R"((^|[^\d])(-?\d{1,3})(?!\d))");
    const std::string text(reply);
    std::smatch m;
    int n = 0;
    if (std::regex_search(text, m, bracketed)) {
        n = std::stoi(m[1].str());
    } else if (std::regex_search(text, m, bare)) {
        n = std::stoi(m[2].str());
    } else {
        warn(diag, "citation", "unparseable citation reply");
        return std::nullopt;
    }
    if (n == -1) {
        return std::nullopt;
    }
    const bool known =
        std::any_of(docs.begin(), docs.end(), [n](const SourceDoc& d) { return d.doc_index == n; });
    if (!known) {
        warn(diag, "citation", "citation reply [" + std::to_string(n) + "] names no listed document");
        return std::nullopt;
    }
    return n;
}

std::string render_citation_prompt(std::string_view sentence, const EntitySet& entities,
                                   const std::vector<SourceDoc>& docs) {
    std::string listing;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        listing += (i == 0 ? "" : "\n") + ("[" + std::to_string(docs[i].doc_index) + "] ") + docs[i].title + ": " +
                   docs[i].excerpt;
    }
    const std::string tmpl = prompts::replace_list_block(prompts::template_text(prompts::kCitationSourceMatching),
                                                         "[1] {Retrieved Document}", listing);
    return prompts::fill(tmpl, {{"Sentence", utf8::normalize_space(sentence)},
                                {"Time", entity_line(entities.times)},
                                {"Location", entity_line(entities.locations)},
                                {"Person", entity_line(entities.persons)},
                                {"Job Title", entity_line(entities.job_titles)},
                                {"Numbers", entity_line(entities.numbers)}});
}

std::optional<int> identify_citation(std::string_view sentence, const EntitySet& entities,
                                     const std::vector<SourceDoc>& docs, gateway::Gateway& gw, Diagnostics* diag) {
    if (entities.empty() || docs.empty()) {
        throw ContractViolation("identify_citation: entities and documents must be non-empty");
    }
    const std::string s = utf8::normalize_space(sentence);
    const std::string reply = gw.chat_complete({std::string(prompts::kCitationSourceMatching), s,
                                                render_citation_prompt(s, entities, docs)},
                                               gateway::judge_params());
    return parse_citation_reply(reply, docs, diag);
}

std::string_view to_string(CitationMethod m) {
    switch (m) {
    case CitationMethod::EntityMatch:
        return "entity-match";
    case CitationMethod::EmbeddingFallback:
        return "embedding-fallback";
    case CitationMethod::None:
        return "none";
    }
    return "none";
}

void to_json(json& j, const CitationEvent& e) {
    j = json{{"sentence_index", e.sentence_index},
             {"char_range", {e.char_range.start, e.char_range.end}},
             {"doc_index", e.doc_index ? json(*e.doc_index) : json(nullptr)},
             {"method", to_string(e.method)}};
}

std::optional<int> embedding_fallback(const Embedding& sentence, const std::vector<SourceDoc>& docs,
                                      double threshold) {
    std::optional<int> best;
    double best_sim = 0.0;
    for (const auto& d : docs) {
        if (d.passage_embeddings.empty()) {
            continue;
        }
        const double s = doc_similarity(sentence, d);
        if (!best || s > best_sim) {
            best = d.doc_index;
            best_sim = s;
        }
    }
    if (best && best_sim > threshold) {
        return best;
    }
    return std::nullopt;
}

CitationEvent cite_sentence(const generation::Sentence& sentence, const std::vector<SourceDoc>& docs,
                            gateway::Gateway& gw, const PipelineConfig& cfg, Diagnostics* diag) {
    CitationEvent ev{sentence.index, sentence.range, std::nullopt, CitationMethod::None};
    const std::string text = utf8::normalize_space(sentence.text);
    if (docs.empty() || text.empty()) {
        return ev;
    }
    EntitySet entities;
    try {
        entities = extract_entities(text, gw, diag);
    } catch (const Error& e) {
        warn(diag, "citation", std::string("entity extraction failed: ") + e.what());
    }
    if (!entities.empty()) {
        try {
            ev.doc_index = identify_citation(text, entities, docs, gw, diag);
            if (ev.doc_index) {
                ev.method = CitationMethod::EntityMatch;
            }
            return ev;
        } catch (const Error& e) {
            warn(diag, "citation", std::string("source matching failed: ") + e.what());
        }
    }
    try {
        const auto emb = gw.embed({text});
        ev.doc_index = embedding_fallback(emb.front(), docs, cfg.citation_fallback_threshold);
        if (ev.doc_index) {
            ev.method = CitationMethod::EmbeddingFallback;
        }
    } catch (const Error& e) {
        warn(diag, "citation", std::string("embedding fallback failed: ") + e.what());
    }
    return ev;
}

std::vector<CitationEvent> attach_citations(const std::vector<generation::Sentence>& sentences,
                                            const std::vector<SourceDoc>& docs, gateway::Gateway& gw,
                                            const PipelineConfig& cfg, Diagnostics* diag) {
    std::vector<CitationEvent> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        out.push_back(cite_sentence(s, docs, gw, cfg, diag));
    }
    return out;
}

CitationWorker::CitationWorker(std::vector<SourceDoc> docs, gateway::Gateway& gw, PipelineConfig cfg, Sink on_event,
                               Diagnostics* diag)
    : docs_(std::move(docs)), gw_(gw), cfg_(std::move(cfg)), on_event_(std::move(on_event)), diag_(diag) {
    thread_ = std::thread([this] { run(); });
}

CitationWorker::~CitationWorker() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
}

void CitationWorker::push(generation::Sentence sentence) {
    {
        std::lock_guard lock(mu_);
        if (closed_) {
            throw ContractViolation("CitationWorker: push after finish");
        }
        queue_.push_back(std::move(sentence));
    }
    cv_.notify_one();
}

std::vector<CitationEvent> CitationWorker::finish() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
    if (thread_.joinable()) {
        thread_.join();
    }
    std::lock_guard lock(mu_);
    return events_;
}

void CitationWorker::run() {
    for (;;) {
        generation::Sentence s;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return closed_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            s = std::move(queue_.front());
            queue_.pop_front();
        }
        CitationEvent ev{s.index, s.range, std::nullopt, CitationMethod::None};
        try {
            ev = cite_sentence(s, docs_, gw_, cfg_, diag_);
        } catch (const std::exception& e) {
            warn(diag_, "citation", std::string("citation failed: ") + e.what());
        }
        {
            std::lock_guard lock(mu_);
            events_.push_back(ev);
        }
        if (on_event_) {
            on_event_(ev);
        }
    }
}

} // namespace qsearch::presentation
