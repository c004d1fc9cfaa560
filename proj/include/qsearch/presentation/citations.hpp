#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/generation/segmenter.hpp"
#include "qsearch/presentation/source_docs.hpp"

namespace qsearch::presentation {

struct EntitySet {
    std::vector<std::string> times;
    std::vector<std::string> locations;
    std::vector<std::string> persons;
    std::vector<std::string> job_titles;
    std::vector<std::string> numbers;

    bool empty() const noexcept;
};

void to_json(nlohmann::json& j, const EntitySet& e);

// Lenient parse of the extraction JSON; scalars become one-element lists,
// unknown fields are ignored. nullopt when the reply is not a JSON object.
std::optional<EntitySet> parse_entities(std::string_view reply);

// One retry on unparseable output, then an empty set.
EntitySet extract_entities(std::string_view sentence, gateway::Gateway& gw, Diagnostics* diag = nullptr);

// Parses "[n]" or a bare number; -1, out-of-range and garbage give nullopt.
std::optional<int> parse_citation_reply(std::string_view reply, const std::vector<SourceDoc>& docs,
                                        Diagnostics* diag = nullptr);

std::string render_citation_prompt(std::string_view sentence, const EntitySet& entities,
                                   const std::vector<SourceDoc>& docs);

std::optional<int> identify_citation(std::string_view sentence, const EntitySet& entities,
                                     const std::vector<SourceDoc>& docs, gateway::Gateway& gw,
                                     Diagnostics* diag = nullptr);

enum class CitationMethod { EntityMatch, EmbeddingFallback, None };

std::string_view to_string(CitationMethod m);

struct CitationEvent {
    std::size_t sentence_index = 0;
    CharRange char_range;
    std::optional<int> doc_index;
    CitationMethod method = CitationMethod::None;
};

void to_json(nlohmann::json& j, const CitationEvent& e);

// Best document by passage cosine, cited only when the similarity exceeds
// the threshold.
std::optional<int> embedding_fallback(const Embedding& sentence, const std::vector<SourceDoc>& docs,
                                      double threshold);

CitationEvent cite_sentence(const generation::Sentence& sentence, const std::vector<SourceDoc>& docs,
                            gateway::Gateway& gw, const PipelineConfig& cfg, Diagnostics* diag = nullptr);

std::vector<CitationEvent> attach_citations(const std::vector<generation::Sentence>& sentences,
                                            const std::vector<SourceDoc>& docs, gateway::Gateway& gw,
                                            const PipelineConfig& cfg, Diagnostics* diag = nullptr);

// Cites sentences on a background thread as they complete. Events are
// delivered in sentence order through `on_event` (from the worker thread).
class CitationWorker {
public:
    using Sink = std::function<void(const CitationEvent&)>;

    CitationWorker(std::vector<SourceDoc> docs, gateway::Gateway& gw, PipelineConfig cfg, Sink on_event,
                   Diagnostics* diag = nullptr);
    ~CitationWorker();
    CitationWorker(const CitationWorker&) = delete;
    CitationWorker& operator=(const CitationWorker&) = delete;

    void push(generation::Sentence sentence);
    // Blocks until every pushed sentence has its event; returns them in order.
    std::vector<CitationEvent> finish();

private:
    void run();

    std::vector<SourceDoc> docs_;
    gateway::Gateway& gw_;
    PipelineConfig cfg_;
    Sink on_event_;
    Diagnostics* diag_;

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<generation::Sentence> queue_;
    bool closed_ = false;
    std::vector<CitationEvent> events_;
    std::thread thread_;
};

} // namespace qsearch::presentation
