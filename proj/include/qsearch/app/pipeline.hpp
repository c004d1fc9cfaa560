#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/app/cache.hpp"
#include "qsearch/app/session.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/retrieval/sources.hpp"

namespace qsearch::app {

// Server-sent event names, in the order they first appear in a stream.
namespace event {
inline constexpr std::string_view kMeta = "meta";
inline constexpr std::string_view kNodeAnswer = "node_answer";
inline constexpr std::string_view kAnswer = "answer";
inline constexpr std::string_view kSentence = "sentence";
inline constexpr std::string_view kCitation = "citation";
inline constexpr std::string_view kTimeline = "timeline";
inline constexpr std::string_view kImages = "images";
inline constexpr std::string_view kDone = "done";
inline constexpr std::string_view kError = "error";
} // namespace event

inline constexpr int kEventSchemaVersion = 1;

// Error codes carried by the `error` event.
namespace error_code {
inline constexpr std::string_view kRefused = "REFUSED";
inline constexpr std::string_view kRetrievalEmpty = "RETRIEVAL_EMPTY";
inline constexpr std::string_view kGenerationUnavailable = "GENERATION_UNAVAILABLE";
inline constexpr std::string_view kGatewayUnavailable = "GATEWAY_UNAVAILABLE";
inline constexpr std::string_view kInternal = "INTERNAL";
} // namespace error_code

// Called once per event; calls are serialized by the pipeline.
using EventSink = std::function<void(std::string_view event, const nlohmann::json& data)>;

struct SearchInput {
    std::string query;
    preproc::UserContext context = preproc::UserContext::now();
    std::optional<std::string> chosen_option;
};

struct PipelineDeps {
    gateway::Gateway* gateway = nullptr;
    std::vector<retrieval::SourcePtr> sources;
    DocumentCache* cache = nullptr; // optional
    PipelineConfig config;
    gateway::GenerationParams generation;
};

class Pipeline {
public:
    // Throws ConfigError when the gateway or sources are missing or the
    // configuration is invalid.
    explicit Pipeline(PipelineDeps deps);

    preproc::IntentAnalysis analyze(std::string_view query, Diagnostics* diag = nullptr);

    // Runs one search end to end. Failures end the stream with an `error`
    // event and are recorded in the returned session; nothing is thrown
    // except ContractViolation for an empty query.
    SearchSession run(const SearchInput& input, const EventSink& sink = {});

    const PipelineConfig& config() const noexcept { return deps_.config; }

private:
    PipelineDeps deps_;
};

} // namespace qsearch::app
