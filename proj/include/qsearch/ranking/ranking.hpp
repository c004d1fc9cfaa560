#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/core/types.hpp"
#include "qsearch/gateway/gateway.hpp"

namespace qsearch::ranking {

struct KeywordSet {
    std::vector<std::string> keywords; // lowercased, whitespace-collapsed
    int source_subquery = 0;
};

void to_json(nlohmann::json& j, const KeywordSet& k);

// Indices kept by the greedy scan: an item survives iff its cosine to every
// previously kept item is below `threshold`.
std::vector<std::size_t> greedy_independent_set(const std::vector<Embedding>& embeddings, double threshold);

// Order-preserving dedup. Throws ContractViolation if a passage lacks an embedding.
std::vector<Passage> deduplicate(std::vector<Passage> passages, double threshold);

// Fills missing passage embeddings with one batched gateway call.
void embed_passages(std::vector<Passage>& passages, gateway::Gateway& gw);

// Model-extracted keywords; falls back to the sub-query's content tokens.
KeywordSet extract_keywords(std::string_view sub_query, int node, gateway::Gateway& gw, Diagnostics* diag = nullptr);

struct SelectionScore {
    double keyword_frequency = 0.0; // raw KF
    double tfidf = 0.0;             // raw TF-IDF
    double score = 0.0;             // alpha * KF/max + (1 - alpha) * TFIDF/max
};

std::vector<SelectionScore> selection_scores(const std::vector<Passage>& passages, const KeywordSet& ks,
                                             double alpha);

// Keeps the best ceil(selection_ratio * n) passages (at least one), ordered
// by score with ties in input order; sets selection_score.
std::vector<Passage> select_passages(std::vector<Passage> passages, const KeywordSet& ks, const PipelineConfig& cfg);

// Stable sort by rerank score, descending. On gateway failure the input
// order is kept and selection scores stand in.
std::vector<Passage> rerank_passages(std::string_view sub_query, std::vector<Passage> passages, gateway::Gateway& gw,
                                     Diagnostics* diag = nullptr);

struct RankedContext {
    int subquery = 0;
    KeywordSet keywords;
    std::vector<Passage> passages;
};

void to_json(nlohmann::json& j, const RankedContext& c);

// embed -> dedup -> keywords -> select -> rerank for one sub-query. Input
// order must be (source rank, position in document).
RankedContext rank_context(std::string_view sub_query, int node, std::vector<Passage> passages, gateway::Gateway& gw,
                           const PipelineConfig& cfg, Diagnostics* diag = nullptr);

} // namespace qsearch::ranking
