#include "qsearch/core/assets.hpp"

#include <map>
#include <sstream>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::assets {

namespace detail {
const std::map<std::string_view, std::string_view>& table();
}

std::string_view get(std::string_view name) {
    const auto& t = detail::table();
    const auto it = t.find(name);
    if (it == t.end()) {
        throw ContractViolation("unknown asset: " + std::string(name));
    }
    return it->second;
}

bool contains(std::string_view name) { return detail::table().count(name) > 0; }

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : detail::table()) {
        out.emplace_back(k);
    }
    return out;
}

std::vector<std::string> word_list(std::string_view name) {
    std::vector<std::string> out;
    std::istringstream in{std::string(get(name))};
    std::string line;
    while (std::getline(in, line)) {
        line = utf8::trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        out.push_back(utf8::to_lower(line));
    }
    return out;
}

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kWords = [] {
        std::unordered_set<std::string> s;
        for (auto& w : word_list("stopwords_en.txt")) {
            s.insert(std::move(w));
        }
        for (auto& w : word_list("stopwords_zh.txt")) {
            s.insert(std::move(w));
        }
        return s;
    }();
    return kWords;
}

const std::unordered_set<std::string>& abbreviations() {
    static const std::unordered_set<std::string> kWords = [] {
        auto list = word_list("abbreviations.txt");
        return std::unordered_set<std::string>(list.begin(), list.end());
    }();
    return kWords;
}

} // namespace qsearch::assets
