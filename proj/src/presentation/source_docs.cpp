#include "qsearch/presentation/source_docs.hpp"

#include <algorithm>
#include <map>

#include "qsearch/core/utf8.hpp"

namespace qsearch::presentation {

std::vector<SourceDoc> build_source_docs(const std::vector<RetrievedDocument>& docs,
                                         const std::vector<Passage>& passages, std::size_t excerpt_chars) {
    std::vector<SourceDoc> out;
    std::map<int, std::size_t> pos;
    for (const auto& d : docs) {
        pos[d.doc_index] = out.size();
        out.push_back(SourceDoc{d.doc_index, d.title, {}, {}});
    }
    std::map<int, std::string> joined;
    for (const auto& p : passages) {
        const auto it = pos.find(p.parent_doc);
        if (it == pos.end()) {
            continue;
        }
        if (p.embedding) {
            out[it->second].passage_embeddings.push_back(*p.embedding);
        }
        auto& j = joined[p.parent_doc];
        if (utf8::length(j) < excerpt_chars) {
            j += (j.empty() ? "" : " ") + utf8::normalize_space(p.text);
        }
    }
    for (const auto& d : docs) {
        auto& sd = out[pos[d.doc_index]];
        std::string text = joined.count(d.doc_index) != 0 ? joined[d.doc_index] : utf8::normalize_space(d.clean_text);
        if (utf8::length(text) > excerpt_chars) {
            text = utf8::substr(text, 0, excerpt_chars);
        }
        sd.excerpt = std::move(text);
    }
    return out;
}

double doc_similarity(const Embedding& text, const SourceDoc& doc) {
    double best = 0.0;
    bool any = false;
    for (const auto& e : doc.passage_embeddings) {
        const double s = cosine_similarity(text, e);
        best = any ? std::max(best, s) : s;
        any = true;
    }
    return best;
}

} // namespace qsearch::presentation
