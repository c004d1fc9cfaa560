#include "qsearch/core/lenient_json.hpp"

#include <cctype>

#include "qsearch/core/utf8.hpp"

namespace qsearch {

using nlohmann::json;

namespace {

std::string_view strip_fences(std::string_view text) {
    const auto open = text.find("```");
    if (open == std::string_view::npos) {
        return text;
    }
    auto body_start = text.find('\n', open);
    if (body_start == std::string_view::npos) {
        return text;
    }
    ++body_start;
    const auto close = text.find("```", body_start);
    if (close == std::string_view::npos) {
        return text.substr(body_start);
    }
    return text.substr(body_start, close - body_start);
}

// First balanced {...} or [...] span, honouring both quote styles.
std::optional<std::string_view> balanced_span(std::string_view text) {
    const auto start = text.find_first_of("{[");
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    int depth = 0;
    char quote = 0;
    for (std::size_t i = start; i < text.size(); ++i) {
        const char c = text[i];
        if (quote != 0) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (--depth == 0) {
                return text.substr(start, i - start + 1);
            }
        }
    }
    return std::nullopt;
}

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Rewrites Python literal syntax into JSON.
std::string pythonic_to_json(std::string_view in) {
    std::string out;
    out.reserve(in.size() + 16);
    std::size_t i = 0;
    while (i < in.size()) {
        const char c = in[i];
        if (c == '"') {
            out.push_back(c);
            ++i;
            while (i < in.size()) {
                const char d = in[i];
                if (d == '\\' && i + 1 < in.size()) {
                    out.push_back(d);
                    out.push_back(in[i + 1]);
                    i += 2;
                    continue;
                }
                if (d == '\n') {
                    out += "\\n";
                    ++i;
                    continue;
                }
                out.push_back(d);
                ++i;
                if (d == '"') {
                    break;
                }
            }
            continue;
        }
        if (c == '\'') {
            out.push_back('"');
            ++i;
            while (i < in.size()) {
                const char d = in[i];
                if (d == '\\' && i + 1 < in.size()) {
                    if (in[i + 1] == '\'') {
                        out.push_back('\'');
                    } else {
                        out.push_back(d);
                        out.push_back(in[i + 1]);
                    }
                    i += 2;
                    continue;
                }
                ++i;
                if (d == '\'') {
                    break;
                }
                if (d == '"') {
                    out += "\\\"";
                } else if (d == '\n') {
                    out += "\\n";
                } else {
                    out.push_back(d);
                }
            }
            out.push_back('"');
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) && (i == 0 || !ident_char(in[i - 1]))) {
            std::size_t j = i;
            while (j < in.size() && ident_char(in[j])) {
                ++j;
            }
            const std::string_view word = in.substr(i, j - i);
            if (word == "True") {
                out += "true";
            } else if (word == "False") {
                out += "false";
            } else if (word == "None") {
                out += "null";
            } else {
                out += word;
            }
            i = j;
            continue;
        }
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < in.size() && std::isspace(static_cast<unsigned char>(in[j]))) {
                ++j;
            }
            if (j < in.size() && (in[j] == '}' || in[j] == ']')) {
                i = j;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

std::optional<json> try_parse(std::string_view s) {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded()) {
        return std::nullopt;
    }
    return j;
}

} // namespace

std::optional<json> parse_lenient_json(std::string_view text) {
    const std::string_view body = strip_fences(text);
    const auto span = balanced_span(body);
    if (!span) {
        return std::nullopt;
    }
    if (auto j = try_parse(*span)) {
        return j;
    }
    return try_parse(pythonic_to_json(*span));
}

std::optional<bool> lenient_bool(const json& value) {
    if (value.is_boolean()) {
        return value.get<bool>();
    }
    if (value.is_number_integer()) {
        return value.get<long long>() != 0;
    }
    if (value.is_string()) {
        const std::string s = utf8::to_lower(utf8::trim(value.get<std::string>()));
        if (s == "yes" || s == "true" || s == "y" || s == "1" || s == "是") {
            return true;
        }
        if (s == "no" || s == "false" || s == "n" || s == "0" || s == "否") {
            return false;
        }
    }
    return std::nullopt;
}

std::string json_text(const json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_null()) {
        return {};
    }
    return value.dump();
}

} // namespace qsearch
