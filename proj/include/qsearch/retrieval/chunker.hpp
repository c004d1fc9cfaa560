#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "qsearch/core/config.hpp"
#include "qsearch/core/types.hpp"

namespace qsearch::retrieval {

// Recursive character splitter. Separators are tried in order: blank line,
// newline, sentence punctuation, space, single characters. Separators stay
// at the end of the piece they terminate. Pieces are packed up to
// `chunk_size` code points with at most `overlap` code points carried into
// the next chunk. Chunks are not trimmed, so their ranges cover `text`;
// a whitespace-only chunk is folded into its predecessor when it fits.
std::vector<Passage> chunk_text(std::string_view text, std::size_t chunk_size, std::size_t overlap);

// Chunks doc.clean_text with the configured size and overlap; passages
// carry doc.doc_index.
std::vector<Passage> chunk_document(const RetrievedDocument& doc, const PipelineConfig& cfg);

} // namespace qsearch::retrieval
