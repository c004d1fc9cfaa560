#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/core/types.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/presentation/source_docs.hpp"

namespace qsearch::presentation {

// Size, aspect-ratio and logo/icon rules. Dimension rules apply only to
// known dimensions.
bool passes_image_rules(const ImageAsset& img, const PipelineConfig& cfg);

// Rule pass, URL dedup, then relevance: images whose description (alt text
// and caption) scores below image_relevance_threshold against the query are
// dropped.
std::vector<ImageAsset> filter_images(const std::vector<ImageAsset>& images, std::string_view main_query,
                                      gateway::Gateway& gw, const PipelineConfig& cfg, Diagnostics* diag = nullptr);

struct Paragraph {
    std::size_t index = 0;
    CharRange range;
    std::string text;
};

// Blocks separated by blank lines; blank blocks are skipped.
std::vector<Paragraph> split_paragraphs(std::string_view text);

struct PlacementComponents {
    double crossmodal = 0.0; // mapped to [0,1]
    double title = 0.0;
    double document = 0.0;
};

// w1*crossmodal + w2*title + w3*document.
double placement_score(const PlacementComponents& c, const std::array<double, 3>& w);

// s[p][i] for every paragraph and image. When cross-modal scoring is
// unavailable its weight is spread over the other two in proportion.
std::vector<std::vector<double>> placement_matrix(const std::vector<std::string>& paragraphs,
                                                  const std::vector<ImageAsset>& images,
                                                  const std::vector<SourceDoc>& docs, gateway::Gateway& gw,
                                                  const PipelineConfig& cfg, Diagnostics* diag = nullptr);

// Minimum-cost perfect assignment on a square matrix; result[r] = column.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost);

struct ImagePlacement {
    std::size_t paragraph_index = 0;
    std::size_t image_index = 0;
    ImageAsset image;
    double score = 0.0;
};

void to_json(nlohmann::json& j, const ImagePlacement& p);

// Maximum-weight matching of paragraphs (rows) to images (columns); pairs
// scoring below `floor` are dropped. Sorted by paragraph.
std::vector<ImagePlacement> assign_images(const std::vector<std::vector<double>>& matrix,
                                          const std::vector<ImageAsset>& images, double floor);

} // namespace qsearch::presentation
