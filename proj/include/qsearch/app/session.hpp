#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/generation/generation.hpp"
#include "qsearch/preproc/preproc.hpp"
#include "qsearch/presentation/citations.hpp"
#include "qsearch/presentation/images.hpp"
#include "qsearch/presentation/timeline.hpp"
#include "qsearch/qdg/qdg.hpp"
#include "qsearch/ranking/ranking.hpp"
#include "qsearch/retrieval/expansion.hpp"

namespace qsearch::app {

inline constexpr int kSessionSchemaVersion = 1;

struct NodeRecord {
    qdg::NodeId node = 0;
    std::string sub_query;
    std::vector<retrieval::RetrievalQuery> retrieval_queries;
    std::vector<int> documents; // doc_index, in hit order
    ranking::RankedContext context;
    std::optional<generation::AnswerStream> answer;
};

struct StageTiming {
    std::string stage;
    double ms = 0.0;
};

struct SessionError {
    std::string code;
    std::string message;
};

// Everything one search produced. Serialized as the session transcript
// that the evaluation suite and the web UI read.
struct SearchSession {
    std::string session_id;
    std::string created_at;
    std::string query;
    std::optional<std::string> chosen_option;
    preproc::UserContext user_context;
    std::optional<preproc::IntentAnalysis> intent;
    std::string effective_query;
    std::string rewritten_query;
    std::optional<qdg::Qdg> qdg;
    int qdg_attempts = 0;
    bool qdg_degraded = false;
    std::vector<NodeRecord> nodes;
    std::vector<RetrievedDocument> documents;
    std::optional<generation::AnswerStream> final_answer;
    std::vector<presentation::CitationEvent> citations;
    std::vector<presentation::TimelineGroup> timeline;
    std::vector<presentation::ImagePlacement> images;
    std::vector<StageTiming> timings;
    double wall_ms = 0.0;
    std::vector<Warning> warnings;
    std::string status = "ok"; // ok | refused | error
    std::optional<SessionError> error;
    PipelineConfig config;
};

void to_json(nlohmann::json& j, const SearchSession& s);

// The transcript without fields that differ between identical runs
// (session id, creation time, timings).
nlohmann::json canonical_transcript(const nlohmann::json& session);

// Final answer with "[n]" markers inserted after each cited sentence.
std::string answer_markdown(const SearchSession& s);

} // namespace qsearch::app
