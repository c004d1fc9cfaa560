#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "qsearch/core/types.hpp"

namespace qsearch::retrieval {

// Parses a page and returns its readable text, title, publication time and
// images. Non-content elements (script, style, nav, footer, aside, form,
// iframe, ...) are dropped; block elements become line or paragraph breaks.
// Returns nullopt when no text survives filtering. doc_index is left 0.
std::optional<RetrievedDocument> clean_document(std::string_view raw_html, std::string_view url);

// Text-level rules applied to each line: half-width normalization, emoji,
// phone number, email and boilerplate removal, whitespace collapsing.
std::string clean_line(std::string_view line);

// Maps full-width ASCII variants and the ideographic space to ASCII, and
// circled numbers to digits.
std::string to_half_width(std::string_view text);

std::string decode_entities(std::string_view text);

// Resolves `ref` against the page URL.
std::string resolve_url(std::string_view base, std::string_view ref);

} // namespace qsearch::retrieval
