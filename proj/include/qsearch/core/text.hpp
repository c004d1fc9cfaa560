#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qsearch::text {

// Lowercased word tokens. Latin/Cyrillic/digit runs form one token each;
// runs of CJK ideographs are emitted as overlapping character bigrams (a
// single isolated ideograph is its own token).
std::vector<std::string> tokenize(std::string_view text);

// tokenize() with stopwords removed. Falls back to all tokens when nothing
// survives the filter.
std::vector<std::string> content_tokens(std::string_view text);

bool is_stopword(std::string_view token);

// |A ∩ B| / |A ∪ B| over token sets; 0 when both are empty.
double jaccard(std::string_view a, std::string_view b);

} // namespace qsearch::text
