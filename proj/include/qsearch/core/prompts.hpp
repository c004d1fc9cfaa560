#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qsearch::prompts {

// Template ids. The text of each lives in assets/prompts/<id>.txt and the id
// is also the fixture directory name used by the stub gateway.
inline constexpr std::string_view kIntentRefusal = "intent_refusal";
inline constexpr std::string_view kIntentClarify = "intent_clarify";
inline constexpr std::string_view kQueryRewrite = "query_rewrite";
inline constexpr std::string_view kQueryAnalysis = "query_analysis";
inline constexpr std::string_view kQueryExpansion = "query_expansion";
inline constexpr std::string_view kKeywordExtraction = "keyword_extraction";
inline constexpr std::string_view kEncyclopediaQa = "encyclopedia_qa";
inline constexpr std::string_view kFinalSynthesis = "final_synthesis";
inline constexpr std::string_view kInfoExtraction = "info_extraction";
inline constexpr std::string_view kCitationSourceMatching = "citation_source_matching";
inline constexpr std::string_view kTimelineEvent = "timeline_event";
inline constexpr std::string_view kTimelineGroup = "timeline_group";
inline constexpr std::string_view kEvaluation = "evaluation_prompt";

// Sole line of the reference-materials block when retrieval found nothing.
inline constexpr std::string_view kNoReferencesMarker = "(no references retrieved)";

// Bumped whenever any template text changes; recorded in session logs.
inline constexpr std::string_view kTemplateVersion = "v1";

std::string_view template_text(std::string_view id);

// Few-shot block for a template, empty when none is shipped.
std::string_view few_shot(std::string_view id);

using Slots = std::vector<std::pair<std::string, std::string>>;

// Replaces every "{Name}" for the given slot names. Braces that do not name a
// slot (e.g. JSON examples inside the template) are left untouched.
std::string fill(std::string_view tmpl, const Slots& slots);

// Replaces the repeated-item block that starts at the line containing
// `first_item_marker` and ends at the next line that is (or ends with) "...",
// inclusive. `replacement` is inserted without a trailing newline.
std::string replace_list_block(std::string_view tmpl, std::string_view first_item_marker,
                               std::string_view replacement);

} // namespace qsearch::prompts
