#include "qsearch/core/prompts.hpp"

#include <algorithm>

#include "qsearch/core/assets.hpp"
#include "qsearch/core/errors.hpp"

namespace qsearch::prompts {

std::string_view template_text(std::string_view id) {
    return assets::get("prompts/" + std::string(id) + ".txt");
}

std::string_view few_shot(std::string_view id) {
    const std::string name = "prompts/" + std::string(id) + ".fewshot.txt";
    return assets::contains(name) ? assets::get(name) : std::string_view{};
}

std::string fill(std::string_view tmpl, const Slots& slots) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const std::string_view name = tmpl.substr(i + 1, close - i - 1);
                const auto it = std::find_if(slots.begin(), slots.end(),
                                             [&](const auto& kv) { return kv.first == name; });
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

std::string replace_list_block(std::string_view tmpl, std::string_view first_item_marker,
                               std::string_view replacement) {
    const auto marker = tmpl.find(first_item_marker);
    if (marker == std::string_view::npos) {
        throw ContractViolation("template has no list block starting with " + std::string(first_item_marker));
    }
    const auto line_start = tmpl.rfind('\n', marker);
    const std::size_t block_start = line_start == std::string_view::npos ? 0 : line_start + 1;
    std::size_t pos = block_start;
    while (pos < tmpl.size()) {
        auto eol = tmpl.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = tmpl.size();
        }
        std::string_view line = tmpl.substr(pos, eol - pos);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) {
            line.remove_suffix(1);
        }
        if (line.size() >= 3 && line.substr(line.size() - 3) == "...") {
            std::string out(tmpl.substr(0, block_start));
            out += replacement;
            out += tmpl.substr(eol);
            return out;
        }
        pos = eol + 1;
    }
    throw ContractViolation("list block starting with " + std::string(first_item_marker) + " is not terminated");
}

} // namespace qsearch::prompts
