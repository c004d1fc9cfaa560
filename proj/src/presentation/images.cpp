#include "qsearch/presentation/images.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <set>

#include "qsearch/core/utf8.hpp"

namespace qsearch::presentation {

using nlohmann::json;

namespace {

std::string description(const ImageAsset& img) {
    std::string d = utf8::normalize_space(img.alt_text);
    if (img.caption) {
        const std::string c = utf8::normalize_space(*img.caption);
        if (!c.empty() && c != d) {
            d += (d.empty() ? "" : " ") + c;
        }
    }
    return d;
}

} // namespace

bool passes_image_rules(const ImageAsset& img, const PipelineConfig& cfg) {
    static const std::regex decorative("logo|icon|sprite|avatar|favicon", std::regex::icase);
    if (img.url.empty() || std::regex_search(img.url, decorative) || std::regex_search(img.alt_text, decorative)) {
        return false;
    }
    if ((img.width > 0 && img.width < cfg.image_min_side) || (img.height > 0 && img.height < cfg.image_min_side)) {
        return false;
    }
    if (img.width > 0 && img.height > 0) {
        const double aspect = static_cast<double>(img.width) / img.height;
        if (aspect < cfg.image_min_aspect || aspect > cfg.image_max_aspect) {
            return false;
        }
    }
    return true;
}

std::vector<ImageAsset> filter_images(const std::vector<ImageAsset>& images, std::string_view main_query,
                                      gateway::Gateway& gw, const PipelineConfig& cfg, Diagnostics* diag) {
    std::vector<ImageAsset> candidates;
    std::set<std::string> seen;
    for (const auto& img : images) {
        if (passes_image_rules(img, cfg) && seen.insert(img.url).second) {
            candidates.push_back(img);
        }
    }
    if (candidates.empty()) {
        return {};
    }
    std::vector<std::string> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) {
        texts.push_back(description(c));
    }
    std::vector<double> scores;
    try {
        scores = gw.rerank_score(main_query, texts);
    } catch (const Error& e) {
        warn(diag, "images", std::string("image relevance scoring failed; no images kept: ") + e.what());
        return {};
    }
    std::vector<ImageAsset> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!texts[i].empty() && scores[i] >= cfg.image_relevance_threshold) {
            out.push_back(std::move(candidates[i]));
        }
    }
    return out;
}

std::vector<Paragraph> split_paragraphs(std::string_view text) {
    const std::u32string cps = utf8::decode(text);
    std::vector<Paragraph> out;
    std::size_t block_start = std::u32string::npos;
    std::size_t block_end = 0;
    auto flush = [&] {
        if (block_start != std::u32string::npos) {
            const std::string t = utf8::encode(cps.substr(block_start, block_end - block_start));
            out.push_back(Paragraph{out.size(), {block_start, block_end}, t});
        }
        block_start = std::u32string::npos;
    };
    std::size_t line_start = 0;
    while (line_start <= cps.size()) {
        std::size_t line_end = cps.find(U'\n', line_start);
        if (line_end == std::u32string::npos) {
            line_end = cps.size();
        }
        std::size_t a = line_start;
        std::size_t b = line_end;
        while (a < b && utf8::is_space(cps[a])) {
            ++a;
        }
        while (b > a && utf8::is_space(cps[b - 1])) {
            --b;
        }
        if (a == b) {
            flush();
        } else {
            if (block_start == std::u32string::npos) {
                block_start = a;
            }
            block_end = b;
        }
        line_start = line_end + 1;
    }
    flush();
    return out;
}

double placement_score(const PlacementComponents& c, const std::array<double, 3>& w) {
    return w[0] * c.crossmodal + w[1] * c.title + w[2] * c.document;
}

std::vector<std::vector<double>> placement_matrix(const std::vector<std::string>& paragraphs,
                                                  const std::vector<ImageAsset>& images,
                                                  const std::vector<SourceDoc>& docs, gateway::Gateway& gw,
                                                  const PipelineConfig& cfg, Diagnostics* diag) {
    if (paragraphs.empty() || images.empty()) {
        throw ContractViolation("placement_matrix: paragraphs and images must be non-empty");
    }
    const std::size_t P = paragraphs.size();
    const std::size_t I = images.size();
    std::vector<std::vector<PlacementComponents>> comp(P, std::vector<PlacementComponents>(I));
    std::array<double, 3> w = cfg.image_weights;

    bool crossmodal = true;
    for (std::size_t p = 0; p < P && crossmodal; ++p) {
        try {
            const auto sims = gw.crossmodal_similarity(paragraphs[p], images);
            for (std::size_t i = 0; i < I; ++i) {
                comp[p][i].crossmodal = std::clamp((sims[i] + 1.0) / 2.0, 0.0, 1.0);
            }
        } catch (const Error& e) {
            crossmodal = false;
            warn(diag, "images", std::string("cross-modal scoring unavailable; reweighting: ") + e.what());
        }
    }
    if (!crossmodal) {
        const double rest = w[1] + w[2];
        if (rest > 0.0) {
            w = {0.0, w[1] + w[0] * w[1] / rest, w[2] + w[0] * w[2] / rest};
        } else {
            w = {0.0, 0.5, 0.5};
        }
    }

    std::map<int, const SourceDoc*> by_index;
    for (const auto& d : docs) {
        by_index[d.doc_index] = &d;
    }
    std::vector<std::string> titles;
    for (const auto& img : images) {
        const auto it = by_index.find(img.parent_doc);
        titles.push_back(it == by_index.end() ? std::string() : it->second->title);
    }
    try {
        for (std::size_t p = 0; p < P; ++p) {
            const auto scores = gw.rerank_score(paragraphs[p], titles);
            for (std::size_t i = 0; i < I; ++i) {
                comp[p][i].title = std::clamp(scores[i], 0.0, 1.0);
            }
        }
    } catch (const Error& e) {
        warn(diag, "images", std::string("title relevance scoring failed: ") + e.what());
    }

    try {
        const auto embs = gw.embed(paragraphs);
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t i = 0; i < I; ++i) {
                const auto it = by_index.find(images[i].parent_doc);
                if (it != by_index.end()) {
                    comp[p][i].document = std::max(0.0, doc_similarity(embs[p], *it->second));
                }
            }
        }
    } catch (const Error& e) {
        warn(diag, "images", std::string("document similarity failed: ") + e.what());
    }

    std::vector<std::vector<double>> out(P, std::vector<double>(I));
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t i = 0; i < I; ++i) {
            out[p][i] = placement_score(comp[p][i], w);
        }
    }
    return out;
}

std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    for (const auto& row : cost) {
        if (row.size() != n) {
            throw ContractViolation("hungarian: cost matrix must be square");
        }
    }
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based potentials; way[j] is the previous column on the augmenting path.
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0);
    std::vector<std::size_t> way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> result(n);
    for (std::size_t j = 1; j <= n; ++j) {
        result[match[j] - 1] = j - 1;
    }
    return result;
}

void to_json(json& j, const ImagePlacement& p) {
    j = json{{"paragraph_index", p.paragraph_index},
             {"image_index", p.image_index},
             {"url", p.image.url},
             {"alt_text", p.image.alt_text},
             {"caption", p.image.caption ? json(*p.image.caption) : json(nullptr)},
             {"width", p.image.width},
             {"height", p.image.height},
             {"parent_doc", p.image.parent_doc},
             {"score", p.score}};
}

std::vector<ImagePlacement> assign_images(const std::vector<std::vector<double>>& matrix,
                                          const std::vector<ImageAsset>& images, double floor) {
    const std::size_t P = matrix.size();
    const std::size_t I = images.size();
    if (P == 0 || I == 0) {
        return {};
    }
    double max_entry = 0.0;
    for (const auto& row : matrix) {
        if (row.size() != I) {
            throw ContractViolation("assign_images: matrix width must equal the image count");
        }
        for (const double s : row) {
            if (!std::isfinite(s)) {
                throw ContractViolation("assign_images: matrix entries must be finite");
            }
            max_entry = std::max(max_entry, s);
        }
    }
    const std::size_t n = std::max(P, I);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, max_entry));
    for (std::size_t p = 0; p < P; ++p) {
        for (std::size_t i = 0; i < I; ++i) {
            cost[p][i] = max_entry - matrix[p][i];
        }
    }
    const auto cols = hungarian(cost);
    std::vector<ImagePlacement> out;
    for (std::size_t p = 0; p < P; ++p) {
        const std::size_t i = cols[p];
        if (i < I && matrix[p][i] >= floor) {
            out.push_back(ImagePlacement{p, i, images[i], matrix[p][i]});
        }
    }
    return out;
}

} // namespace qsearch::presentation
