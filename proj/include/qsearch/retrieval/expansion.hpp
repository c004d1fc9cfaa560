#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/gateway/gateway.hpp"

namespace qsearch::retrieval {

enum class Dimension { ContentMastery, KeyElements, ContextualAnalysis, ExtendedThinking, Verbatim };

std::string_view to_string(Dimension d);

// Text actually sent to a search source.
struct RetrievalQuery {
    std::string text;
    int origin_subquery = 0;
    Dimension dimension = Dimension::Verbatim;
};

void to_json(nlohmann::json& j, const RetrievalQuery& q);

// Verbatim sub-query first, then up to expansion_count model-generated
// questions. Duplicates (case and whitespace insensitive) are dropped.
std::vector<RetrievalQuery> expand_query(std::string_view sub_query, int origin_subquery, gateway::Gateway& gw,
                                         const PipelineConfig& cfg, Diagnostics* diag = nullptr);

} // namespace qsearch::retrieval
