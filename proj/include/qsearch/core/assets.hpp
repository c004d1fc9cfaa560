#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

// Text assets (prompt templates, word lists) compiled into the binary from
// the repository's assets/ directory.
namespace qsearch::assets {

// Throws ContractViolation for an unknown name, e.g. "prompts/qdg.txt".
std::string_view get(std::string_view name);

bool contains(std::string_view name);

std::vector<std::string> names();

// Non-empty, non-comment lines of a word-list asset, lowercased.
std::vector<std::string> word_list(std::string_view name);

// Union of the English and Chinese stopword lists.
const std::unordered_set<std::string>& stopwords();

// Words that, followed by ".", do not end a sentence.
const std::unordered_set<std::string>& abbreviations();

} // namespace qsearch::assets
