#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qsearch/core/diagnostics.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/generation/segmenter.hpp"
#include "qsearch/qdg/qdg.hpp"

namespace qsearch::generation {

struct QaPair {
    std::string question;
    std::optional<std::string> answer; // nullopt: not answered yet
};

struct NodePrompt {
    qdg::NodeId node = 0;
    std::string sub_query;
    std::vector<QaPair> ancestor_qas;
    std::vector<std::string> passages;
    std::string rendered;
};

// Fills the encyclopedia Q&A template: question, ancestor Q&A pairs (one
// line each for question and answer), then "[n] passage" lines in the given
// order. With no passages the materials block is the no-references marker.
// Throws ContractViolation when an ancestor has no answer.
NodePrompt build_node_prompt(qdg::NodeId node, std::string_view sub_query, const std::vector<QaPair>& ancestor_qas,
                             const std::vector<Passage>& passages);

struct AnswerStream {
    qdg::NodeId node = 0;
    std::string text;
    std::vector<std::string> deltas;
    std::vector<Sentence> sentences;
    bool failed = false;
    std::string error;
    std::vector<std::string> notes;

    std::vector<std::size_t> sentence_boundaries() const;
};

void to_json(nlohmann::json& j, const AnswerStream& a);

struct StreamCallbacks {
    std::function<void(std::string_view delta)> on_delta;
    std::function<void(const Sentence&)> on_sentence;
};

// Streams one chat completion through the sentence segmenter. A gateway
// failure keeps the partial text and marks the stream failed.
AnswerStream stream_answer(const gateway::ChatRequest& request, qdg::NodeId node, gateway::Gateway& gw,
                           const gateway::GenerationParams& params, const StreamCallbacks& cb = {},
                           Diagnostics* diag = nullptr);

AnswerStream answer_node(const NodePrompt& prompt, gateway::Gateway& gw, const gateway::GenerationParams& params,
                         const StreamCallbacks& cb = {}, Diagnostics* diag = nullptr);

// Runs fn(node) for every node, layer by layer. Nodes of a layer run on
// their own threads; a layer starts only after the previous one finished.
// The first exception is rethrown after the layer completes.
void run_layers(const qdg::Qdg& g, const std::function<void(qdg::NodeId)>& fn);

// Answers every node of `g` in dependency order and records each answer on
// the graph. `passages_for(node)` supplies the ranked context.
std::map<qdg::NodeId, AnswerStream> answer_graph(
    qdg::Qdg& g, const std::function<std::vector<Passage>(qdg::NodeId)>& passages_for, gateway::Gateway& gw,
    const gateway::GenerationParams& params,
    const std::function<StreamCallbacks(qdg::NodeId)>& callbacks_for = {}, Diagnostics* diag = nullptr);

// Final answer. A Terminal graph reuses its single node's stream without a
// model call; otherwise the non-failed leaf Q&As (topological order) are
// rendered into the synthesis prompt. Throws PipelineError
// "generation_unavailable" when every leaf failed.
AnswerStream synthesize_final(const qdg::Qdg& g, const std::map<qdg::NodeId, AnswerStream>& answers,
                              gateway::Gateway& gw, const gateway::GenerationParams& params,
                              const StreamCallbacks& cb = {}, Diagnostics* diag = nullptr);

// The synthesis prompt for the given leaf Q&As.
std::string render_synthesis_prompt(std::string_view root_query, const std::vector<QaPair>& leaf_qas);

// Node id reported for the final answer stream.
inline constexpr qdg::NodeId kFinalNode = -1;

} // namespace qsearch::generation
