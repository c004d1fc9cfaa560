#include "qsearch/core/text.hpp"

#include <set>

#include "qsearch/core/assets.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::text {

std::vector<std::string> tokenize(std::string_view input) {
    const std::u32string cps = utf8::decode(input);
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < cps.size()) {
        const char32_t cp = cps[i];
        if (utf8::is_cjk(cp)) {
            std::size_t j = i;
            while (j < cps.size() && utf8::is_cjk(cps[j])) {
                ++j;
            }
            if (j - i == 1) {
                std::string t;
                utf8::append(t, cps[i]);
                tokens.push_back(std::move(t));
            } else {
                for (std::size_t k = i; k + 1 < j; ++k) {
                    std::string t;
                    utf8::append(t, cps[k]);
                    utf8::append(t, cps[k + 1]);
                    tokens.push_back(std::move(t));
                }
            }
            i = j;
            continue;
        }
        if (utf8::is_alnum(cp)) {
            std::string t;
            while (i < cps.size() && utf8::is_alnum(cps[i]) && !utf8::is_cjk(cps[i])) {
                utf8::append(t, utf8::to_lower(cps[i]));
                ++i;
            }
            tokens.push_back(std::move(t));
            continue;
        }
        ++i;
    }
    return tokens;
}

bool is_stopword(std::string_view token) { return assets::stopwords().count(std::string(token)) > 0; }

std::vector<std::string> content_tokens(std::string_view input) {
    auto all = tokenize(input);
    std::vector<std::string> kept;
    for (const auto& t : all) {
        if (!is_stopword(t)) {
            kept.push_back(t);
        }
    }
    return kept.empty() ? all : kept;
}

double jaccard(std::string_view a, std::string_view b) {
    const auto ta = tokenize(a);
    const auto tb = tokenize(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) {
        return 0.0;
    }
    std::size_t inter = 0;
    for (const auto& t : sa) {
        inter += sb.count(t);
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace qsearch::text
