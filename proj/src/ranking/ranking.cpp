#include "qsearch/ranking/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/lenient_json.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/text.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::ranking {

using nlohmann::json;

void to_json(json& j, const KeywordSet& k) {
    j = json{{"keywords", k.keywords}, {"source_subquery", k.source_subquery}};
}

std::vector<std::size_t> greedy_independent_set(const std::vector<Embedding>& embeddings, double threshold) {
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        const bool independent = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return cosine_similarity(embeddings[i], embeddings[k]) < threshold;
        });
        if (independent) {
            kept.push_back(i);
        }
    }
    return kept;
}

std::vector<Passage> deduplicate(std::vector<Passage> passages, double threshold) {
    std::vector<Embedding> embs;
    embs.reserve(passages.size());
    for (const auto& p : passages) {
        if (!p.embedding) {
            throw ContractViolation("deduplicate: passage without embedding");
        }
        embs.push_back(*p.embedding);
    }
    std::vector<Passage> out;
    for (std::size_t i : greedy_independent_set(embs, threshold)) {
        out.push_back(std::move(passages[i]));
    }
    return out;
}

void embed_passages(std::vector<Passage>& passages, gateway::Gateway& gw) {
    std::vector<std::size_t> missing;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (!passages[i].embedding) {
            missing.push_back(i);
            texts.push_back(passages[i].text);
        }
    }
    if (texts.empty()) {
        return;
    }
    auto embs = gw.embed(texts);
    for (std::size_t k = 0; k < missing.size(); ++k) {
        passages[missing[k]].embedding = std::move(embs[k]);
    }
}

namespace {

std::vector<std::string> unique_keywords(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& k : raw) {
        auto norm = utf8::to_lower(utf8::normalize_space(k));
        if (!norm.empty() && seen.insert(norm).second) {
            out.push_back(std::move(norm));
        }
    }
    return out;
}

std::optional<std::vector<std::string>> parse_keywords(std::string_view reply) {
    auto j = parse_lenient_json(reply);
    if (!j) {
        return std::nullopt;
    }
    if (j->is_object() && j->contains("keywords")) {
        *j = (*j)["keywords"];
    }
    if (!j->is_array()) {
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& item : *j) {
        if (item.is_string()) {
            out.push_back(item.get<std::string>());
        } else if (item.is_number()) {
            out.push_back(item.dump());
        }
    }
    return out;
}

// Occurrences of the token sequence `needle` in `hay`.
std::size_t count_occurrences(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > hay.size()) {
        return 0;
    }
    std::size_t n = 0;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
            ++n;
        }
    }
    return n;
}

} // namespace

KeywordSet extract_keywords(std::string_view sub_query, int node, gateway::Gateway& gw, Diagnostics* diag) {
    const std::string q = utf8::normalize_space(sub_query);
    if (q.empty()) {
        throw ContractViolation("extract_keywords: sub-query must be non-empty");
    }
    KeywordSet ks;
    ks.source_subquery = node;
    const std::string prompt =
        prompts::fill(prompts::template_text(prompts::kKeywordExtraction), {{"Sub-Query", q}});
    const std::string reply = gw.chat_complete(
        gateway::ChatRequest{std::string(prompts::kKeywordExtraction), q, prompt}, gateway::judge_params());
    if (const auto parsed = parse_keywords(reply)) {
        ks.keywords = unique_keywords(*parsed);
    } else {
        warn(diag, "ranking", "unparseable keyword extraction for \"" + q + "\"; using query tokens");
    }
    if (ks.keywords.empty()) {
        ks.keywords = unique_keywords(text::content_tokens(q));
    }
    return ks;
}

std::vector<SelectionScore> selection_scores(const std::vector<Passage>& passages, const KeywordSet& ks,
                                             double alpha) {
    const std::size_t n = passages.size();
    std::vector<std::vector<std::string>> tokens(n);
    for (std::size_t i = 0; i < n; ++i) {
        tokens[i] = text::tokenize(passages[i].text);
    }
    std::vector<std::vector<std::string>> kw_tokens;
    for (const auto& k : ks.keywords) {
        auto t = text::tokenize(k);
        if (!t.empty()) {
            kw_tokens.push_back(std::move(t));
        }
    }
    // tf[k][i]
    std::vector<std::vector<std::size_t>> tf(kw_tokens.size(), std::vector<std::size_t>(n, 0));
    for (std::size_t k = 0; k < kw_tokens.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            tf[k][i] = count_occurrences(tokens[i], kw_tokens[k]);
        }
    }
    std::vector<SelectionScore> out(n);
    for (std::size_t k = 0; k < kw_tokens.size(); ++k) {
        const auto df = static_cast<double>(std::count_if(tf[k].begin(), tf[k].end(), [](std::size_t c) { return c > 0; }));
        const double idf = std::log((1.0 + static_cast<double>(n)) / (1.0 + df));
        for (std::size_t i = 0; i < n; ++i) {
            out[i].tfidf += static_cast<double>(tf[k][i]) * idf;
            out[i].keyword_frequency += static_cast<double>(tf[k][i]);
        }
    }
    double max_kf = 0.0;
    double max_tfidf = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i].keyword_frequency =
            tokens[i].empty() ? 0.0 : out[i].keyword_frequency / static_cast<double>(tokens[i].size());
        max_kf = std::max(max_kf, out[i].keyword_frequency);
        max_tfidf = std::max(max_tfidf, out[i].tfidf);
    }
    for (auto& s : out) {
        const double kf = max_kf > 0.0 ? s.keyword_frequency / max_kf : 0.0;
        const double ti = max_tfidf > 0.0 ? s.tfidf / max_tfidf : 0.0;
        s.score = alpha * kf + (1.0 - alpha) * ti;
    }
    return out;
}

std::vector<Passage> select_passages(std::vector<Passage> passages, const KeywordSet& ks, const PipelineConfig& cfg) {
    if (passages.empty()) {
        return passages;
    }
    const auto scores = selection_scores(passages, ks, cfg.selection_alpha);
    std::vector<std::size_t> order(passages.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.selection_ratio * static_cast<double>(passages.size()) - 1e-9)));
    std::vector<Passage> out;
    out.reserve(keep);
    for (std::size_t r = 0; r < keep && r < order.size(); ++r) {
        Passage p = std::move(passages[order[r]]);
        p.selection_score = scores[order[r]].score;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> rerank_passages(std::string_view sub_query, std::vector<Passage> passages, gateway::Gateway& gw,
                                     Diagnostics* diag) {
    if (passages.empty()) {
        return passages;
    }
    std::vector<std::string> texts;
    texts.reserve(passages.size());
    for (const auto& p : passages) {
        texts.push_back(p.text);
    }
    std::vector<double> scores;
    try {
        scores = gw.rerank_score(sub_query, texts);
    } catch (const Error& e) {
        warn(diag, "ranking", std::string("rerank failed; keeping selection order: ") + e.what());
        for (auto& p : passages) {
            p.rerank_score = p.selection_score;
        }
        return passages;
    }
    for (std::size_t i = 0; i < passages.size(); ++i) {
        passages[i].rerank_score = scores[i];
    }
    std::stable_sort(passages.begin(), passages.end(),
                     [](const Passage& a, const Passage& b) { return a.rerank_score > b.rerank_score; });
    return passages;
}

void to_json(json& j, const RankedContext& c) {
    json passages = json::array();
    for (const auto& p : c.passages) {
        passages.push_back({{"parent_doc", p.parent_doc},
                            {"char_range", {p.char_range.start, p.char_range.end}},
                            {"text", p.text},
                            {"selection_score", p.selection_score},
                            {"rerank_score", p.rerank_score}});
    }
    j = json{{"subquery", c.subquery}, {"keywords", c.keywords}, {"passages", passages}};
}

RankedContext rank_context(std::string_view sub_query, int node, std::vector<Passage> passages, gateway::Gateway& gw,
                           const PipelineConfig& cfg, Diagnostics* diag) {
    RankedContext ctx;
    ctx.subquery = node;
    ctx.keywords = extract_keywords(sub_query, node, gw, diag);
    if (passages.empty()) {
        return ctx;
    }
    embed_passages(passages, gw);
    auto kept = deduplicate(std::move(passages), cfg.dedup_threshold);
    auto selected = select_passages(std::move(kept), ctx.keywords, cfg);
    ctx.passages = rerank_passages(sub_query, std::move(selected), gw, diag);
    return ctx;
}

} // namespace qsearch::ranking
