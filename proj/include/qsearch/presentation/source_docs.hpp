#pragma once

#include <string>
#include <vector>

#include "qsearch/core/types.hpp"

namespace qsearch::presentation {

// A retrieved document as seen by the presentation stages: its title, a
// short excerpt for prompts, and the embeddings of its passages. Document
// similarity to a text is the best cosine over its passages.
struct SourceDoc {
    int doc_index = 0;
    std::string title;
    std::string excerpt;
    std::vector<Embedding> passage_embeddings;
};

// Groups embedded passages by parent document. Documents without embedded
// passages get no embeddings (similarity 0). Excerpts are built from the
// passages in order and capped at `excerpt_chars` code points.
std::vector<SourceDoc> build_source_docs(const std::vector<RetrievedDocument>& docs,
                                         const std::vector<Passage>& passages, std::size_t excerpt_chars = 600);

double doc_similarity(const Embedding& text, const SourceDoc& doc);

} // namespace qsearch::presentation
