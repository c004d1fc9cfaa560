#include "qsearch/retrieval/html_clean.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "qsearch/core/assets.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::retrieval {

namespace {

const std::set<std::string> kDropped{"script", "style",  "nav",    "footer",   "aside",  "form",
                                     "iframe", "head",   "noscript", "svg",    "template", "button",
                                     "select", "object", "canvas"};

const std::set<std::string> kRawText{"script", "style", "textarea", "title", "noscript", "xmp", "iframe"};

const std::set<std::string> kVoid{"area", "base", "br",   "col",   "embed",  "hr",    "img",
                                  "input", "link", "meta", "param", "source", "track", "wbr"};

const std::set<std::string> kParagraph{"p",       "h1",   "h2",   "h3",  "h4",    "h5",
                                       "h6",      "article", "section", "main", "blockquote", "pre",
                                       "ul",      "ol",   "table", "figure", "header", "dl"};

const std::set<std::string> kLine{"div", "li", "br", "tr", "dd", "dt", "figcaption", "hr", "caption", "address"};

const std::set<std::string> kCell{"td", "th"};

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

bool istarts_with(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) {
            return false;
        }
    }
    return true;
}

std::size_t ifind(std::string_view s, std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= s.size(); ++i) {
        if (istarts_with(s, i, needle)) {
            return i;
        }
    }
    return std::string_view::npos;
}

using Attrs = std::map<std::string, std::string>;

struct Builder {
    std::string url;
    std::vector<std::pair<int, std::string>> lines; // (gap before, text)
    std::string cur;
    int cur_gap = 0;
    int pending = 0;

    std::vector<std::string> stack;
    int dropped_depth = 0;

    std::string title_tag;
    std::string og_title;
    std::string h1;
    bool in_h1 = false;
    bool h1_done = false;
    std::optional<Timestamp> meta_time;
    std::optional<Timestamp> time_tag;
    bool in_time = false;
    std::string time_text;

    std::vector<ImageAsset> images;
    std::vector<std::vector<std::size_t>> figures;
    std::vector<std::string> figcaptions;
    int in_figcaption = 0;

    void flush() {
        if (!utf8::trim(cur).empty()) {
            lines.emplace_back(cur_gap, cur);
        }
        cur.clear();
    }

    void brk(int level) {
        flush();
        pending = std::max(pending, level);
    }

    void text(std::string_view t) {
        if (dropped_depth > 0) {
            return;
        }
        if (cur.empty()) {
            if (utf8::trim(t).empty()) {
                return;
            }
            cur_gap = pending;
            pending = 0;
        }
        cur += t;
        if (in_h1 && !h1_done) {
            h1 += t;
        }
        if (in_figcaption > 0 && !figcaptions.empty()) {
            figcaptions.back() += t;
        }
        if (in_time) {
            time_text += t;
        }
    }

    void meta(const Attrs& a) {
        const auto get = [&](const char* k) {
            const auto it = a.find(k);
            return it == a.end() ? std::string() : lower_ascii(it->second);
        };
        const std::string key = !get("property").empty() ? get("property")
                                : !get("name").empty()   ? get("name")
                                                         : get("itemprop");
        const auto content = a.find("content");
        if (content == a.end()) {
            return;
        }
        if (key == "og:title" && og_title.empty()) {
            og_title = content->second;
        }
        static const std::set<std::string> kTimeKeys{"article:published_time", "og:published_time", "pubdate",
                                                     "publishdate",            "datepublished",     "date",
                                                     "dc.date",                "dc.date.issued"};
        if (!meta_time && kTimeKeys.count(key) != 0) {
            meta_time = Timestamp::parse(content->second);
        }
    }

    void image(const Attrs& a) {
        if (dropped_depth > 0) {
            return;
        }
        auto src = a.count("src") != 0 ? a.at("src") : std::string();
        if ((src.empty() || src.rfind("data:", 0) == 0) && a.count("data-src") != 0) {
            src = a.at("data-src");
        }
        const std::string resolved = resolve_url(url, utf8::trim(src));
        if (resolved.empty()) {
            return;
        }
        const auto dim = [&](const char* k) {
            const auto it = a.find(k);
            if (it == a.end()) {
                return 0;
            }
            int v = 0;
            for (char c : it->second) {
                if (!std::isdigit(static_cast<unsigned char>(c))) {
                    break;
                }
                v = v * 10 + (c - '0');
                if (v > 100000) {
                    break;
                }
            }
            return v;
        };
        ImageAsset img;
        img.url = resolved;
        img.width = dim("width");
        img.height = dim("height");
        img.alt_text = a.count("alt") != 0 ? utf8::normalize_space(a.at("alt")) : std::string();
        if (!figures.empty()) {
            figures.back().push_back(images.size());
        }
        images.push_back(std::move(img));
    }

    void start(const std::string& name, const Attrs& a, bool self_closing) {
        if (name == "meta") {
            meta(a);
            return;
        }
        if (name == "img") {
            image(a);
            return;
        }
        if (name == "time" && dropped_depth == 0 && !time_tag) {
            const auto dt = a.find("datetime");
            if (dt != a.end()) {
                time_tag = Timestamp::parse(dt->second);
            }
            in_time = !time_tag.has_value();
        }
        if (kParagraph.count(name) != 0) {
            brk(2);
        } else if (kLine.count(name) != 0) {
            brk(1);
        } else if (kCell.count(name) != 0 && !cur.empty()) {
            cur += ' ';
        }
        if (kVoid.count(name) != 0 || self_closing) {
            return;
        }
        if ((name == "p" || name == "li") && !stack.empty() && stack.back() == name) {
            end(name);
        }
        stack.push_back(name);
        if (kDropped.count(name) != 0) {
            ++dropped_depth;
        }
        if (name == "h1" && !h1_done) {
            in_h1 = true;
        }
        if (name == "figure") {
            figures.emplace_back();
        }
        if (name == "figcaption") {
            ++in_figcaption;
            figcaptions.emplace_back();
        }
    }

    void close_one(const std::string& name) {
        if (kDropped.count(name) != 0) {
            --dropped_depth;
        }
        if (kParagraph.count(name) != 0) {
            brk(2);
        } else if (kLine.count(name) != 0) {
            brk(1);
        }
        if (name == "h1" && in_h1) {
            in_h1 = false;
            h1_done = !utf8::trim(h1).empty();
        }
        if (name == "time" && in_time) {
            in_time = false;
            time_tag = Timestamp::parse(time_text);
        }
        if (name == "figcaption") {
            --in_figcaption;
        }
        if (name == "figure" && !figures.empty()) {
            const std::string caption = figcaptions.empty() ? std::string() : utf8::normalize_space(figcaptions.back());
            for (std::size_t idx : figures.back()) {
                if (!caption.empty() && !images[idx].caption) {
                    images[idx].caption = caption;
                }
            }
            figures.pop_back();
            if (!figcaptions.empty()) {
                figcaptions.pop_back();
            }
        }
    }

    void end(const std::string& name) {
        if (name == "br") {
            brk(1);
            return;
        }
        const auto it = std::find(stack.rbegin(), stack.rend(), name);
        if (it == stack.rend()) {
            return;
        }
        const auto keep = static_cast<std::size_t>(stack.rend() - it) - 1;
        while (stack.size() > keep) {
            const std::string top = stack.back();
            stack.pop_back();
            close_one(top);
        }
    }
};

Attrs parse_attrs(std::string_view s, std::size_t& i, bool& self_closing) {
    Attrs attrs;
    self_closing = false;
    const auto n = s.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        if (i >= n) {
            break;
        }
        if (s[i] == '>') {
            ++i;
            return attrs;
        }
        if (s[i] == '/') {
            self_closing = true;
            ++i;
            continue;
        }
        const std::size_t name_start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '=' && s[i] != '>' &&
               s[i] != '/') {
            ++i;
        }
        std::string name = lower_ascii(s.substr(name_start, i - name_start));
        while (i < n && std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        }
        std::string value;
        if (i < n && s[i] == '=') {
            ++i;
            while (i < n && std::isspace(static_cast<unsigned char>(s[i]))) {
                ++i;
            }
            if (i < n && (s[i] == '"' || s[i] == '\'')) {
                const char q = s[i++];
                const auto close = s.find(q, i);
                const auto stop = close == std::string_view::npos ? n : close;
                value = decode_entities(s.substr(i, stop - i));
                i = stop == n ? n : stop + 1;
            } else {
                const std::size_t vs = i;
                while (i < n && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '>') {
                    ++i;
                }
                value = decode_entities(s.substr(vs, i - vs));
            }
        }
        if (!name.empty()) {
            attrs.emplace(std::move(name), std::move(value));
        }
    }
    return attrs;
}

void parse(std::string_view s, Builder& b) {
    const auto n = s.size();
    std::size_t i = 0;
    while (i < n) {
        if (s[i] != '<') {
            const auto next = s.find('<', i);
            const auto stop = next == std::string_view::npos ? n : next;
            b.text(decode_entities(s.substr(i, stop - i)));
            i = stop;
            continue;
        }
        if (s.compare(i, 4, "<!--") == 0) {
            const auto close = s.find("-->", i + 4);
            i = close == std::string_view::npos ? n : close + 3;
            continue;
        }
        if (i + 1 < n && (s[i + 1] == '!' || s[i + 1] == '?')) {
            const auto close = s.find('>', i);
            i = close == std::string_view::npos ? n : close + 1;
            continue;
        }
        const bool closing = i + 1 < n && s[i + 1] == '/';
        std::size_t j = i + (closing ? 2 : 1);
        if (j >= n || !std::isalpha(static_cast<unsigned char>(s[j]))) {
            b.text("<");
            ++i;
            continue;
        }
        const std::size_t name_start = j;
        while (j < n && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == ':')) {
            ++j;
        }
        const std::string name = lower_ascii(s.substr(name_start, j - name_start));
        if (closing) {
            const auto close = s.find('>', j);
            i = close == std::string_view::npos ? n : close + 1;
            b.end(name);
            continue;
        }
        bool self_closing = false;
        Attrs attrs = parse_attrs(s, j, self_closing);
        i = j;
        b.start(name, attrs, self_closing);
        if (kRawText.count(name) != 0 && !self_closing) {
            const auto close = ifind(s, "</" + name, i);
            const auto stop = close == std::string_view::npos ? n : close;
            const std::string_view raw = s.substr(i, stop - i);
            if (name == "title" && b.title_tag.empty()) {
                b.title_tag = utf8::normalize_space(decode_entities(raw));
            } else if (name == "textarea") {
                b.text(decode_entities(raw));
            }
            const auto gt = stop == n ? n : s.find('>', stop);
            i = gt == std::string_view::npos ? n : gt + 1;
            b.end(name);
        }
    }
    b.flush();
}

bool is_emoji(char32_t c) {
    return (c >= 0x1F000 && c <= 0x1FAFF) || (c >= 0x2600 && c <= 0x27BF) || (c >= 0x2B00 && c <= 0x2BFF) ||
           (c >= 0xFE00 && c <= 0xFE0F) || c == 0x200D || c == 0x20E3 || (c >= 0xE0020 && c <= 0xE007F);
}

bool is_extra_space(char32_t c) {
    return c == 0xA0 || (c >= 0x2000 && c <= 0x200B) || c == 0x202F || c == 0x205F || c == 0xFEFF;
}

std::string strip_symbols(std::string_view text) {
    std::u32string out;
    for (char32_t c : utf8::decode(text)) {
        if (is_emoji(c)) {
            continue;
        }
        if (is_extra_space(c) || c == U'\t' || c == U'\r') {
            out.push_back(U' ');
        } else if (c < 0x20) {
            continue;
        } else {
            out.push_back(c);
        }
    }
    return utf8::encode(out);
}

const std::regex& email_re() {
    static const std::regex re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,})");
    return re;
}

const std::regex& phone_re() {
    static const std::regex re(
        R"((^|[^0-9A-Za-z+])((\+\d{1,3}[ .-]?)?(\(\d{3}\)|\d{3})[ .-]?\d{3}[ .-]\d{4}|1[3-9]\d{9}|0\d{2,3}-\d{7,8})(?![0-9]))");
    return re;
}

struct Boilerplate {
    std::vector<std::string> phrases;
    std::set<std::string> words;
};

const Boilerplate& boilerplate() {
    static const Boilerplate b = [] {
        Boilerplate out;
        for (auto& w : assets::word_list("boilerplate.txt")) {
            if (w.find(' ') != std::string::npos || (!w.empty() && static_cast<unsigned char>(w[0]) >= 0x80)) {
                out.phrases.push_back(w);
            } else {
                out.words.insert(w);
            }
        }
        return out;
    }();
    return b;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string remove_boilerplate(std::string line) {
    const auto& bp = boilerplate();
    {
        std::string bare = lower_ascii(utf8::normalize_space(line));
        while (!bare.empty() && !word_char(bare.back()) && static_cast<unsigned char>(bare.back()) < 0x80) {
            bare.pop_back();
        }
        std::size_t lead = 0;
        while (lead < bare.size() && !word_char(bare[lead]) && static_cast<unsigned char>(bare[lead]) < 0x80) {
            ++lead;
        }
        bare.erase(0, lead);
        if (bp.words.count(bare) != 0) {
            return {};
        }
    }
    for (const auto& phrase : bp.phrases) {
        for (;;) {
            const std::string lowered = lower_ascii(line);
            std::size_t pos = lowered.find(phrase);
            bool removed = false;
            while (pos != std::string::npos) {
                const bool ascii = static_cast<unsigned char>(phrase[0]) < 0x80;
                const bool left_ok = !ascii || pos == 0 || !word_char(lowered[pos - 1]);
                const std::size_t after = pos + phrase.size();
                const bool right_ok = !ascii || after >= lowered.size() || !word_char(lowered[after]);
                if (left_ok && right_ok) {
                    line.erase(pos, phrase.size());
                    removed = true;
                    break;
                }
                pos = lowered.find(phrase, pos + 1);
            }
            if (!removed) {
                break;
            }
        }
    }
    return line;
}

} // namespace

std::string decode_entities(std::string_view text) {
    static const std::map<std::string, std::string, std::less<>> kNamed{
        {"amp", "&"},     {"lt", "<"},       {"gt", ">"},       {"quot", "\""},     {"apos", "'"},
        {"nbsp", "\u00a0"}, {"mdash", "—"}, {"ndash", "–"}, {"hellip", "…"}, {"copy", "©"},
        {"reg", "®"},  {"middot", "·"}, {"lsquo", "‘"}, {"rsquo", "’"}, {"ldquo", "“"},
        {"rdquo", "”"}, {"laquo", "«"}, {"raquo", "»"}, {"times", "×"}, {"deg", "°"},
        {"ensp", "\u2002"},    {"emsp", "\u2003"},     {"thinsp", "\u2009"},   {"bull", "•"}, {"trade", "™"}};
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out.push_back(text[i++]);
            continue;
        }
        const auto semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(text[i++]);
            continue;
        }
        const std::string_view body = text.substr(i + 1, semi - i - 1);
        if (!body.empty() && body[0] == '#') {
            char32_t cp = 0;
            bool ok = body.size() > 1;
            const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
            for (std::size_t k = hex ? 2 : 1; k < body.size() && ok; ++k) {
                const char c = body[k];
                int d = -1;
                if (c >= '0' && c <= '9') {
                    d = c - '0';
                } else if (hex && std::isxdigit(static_cast<unsigned char>(c))) {
                    d = std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
                }
                ok = d >= 0;
                cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(std::max(d, 0));
                ok = ok && cp <= 0x10FFFF;
            }
            if (ok && (!hex || body.size() > 2)) {
                utf8::append(out, cp == 0 ? 0xFFFD : cp);
                i = semi + 1;
                continue;
            }
        } else if (const auto it = kNamed.find(body); it != kNamed.end()) {
            out += it->second;
            i = semi + 1;
            continue;
        }
        out.push_back(text[i++]);
    }
    return out;
}

std::string to_half_width(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t c : utf8::decode(text)) {
        if (c >= 0xFF01 && c <= 0xFF5E) {
            out.push_back(static_cast<char>(c - 0xFEE0));
        } else if (c == 0x3000) {
            out.push_back(' ');
        } else if (c >= 0x2460 && c <= 0x2473) {
            out += std::to_string(c - 0x2460 + 1);
        } else {
            utf8::append(out, c);
        }
    }
    return out;
}

std::string clean_line(std::string_view line) {
    std::string s = strip_symbols(to_half_width(line));
    s = std::regex_replace(s, email_re(), "");
    s = std::regex_replace(s, phone_re(), "$1");
    s = remove_boilerplate(std::move(s));
    return utf8::normalize_space(s);
}

std::string resolve_url(std::string_view base, std::string_view ref) {
    if (ref.empty() || ref.rfind("data:", 0) == 0 || ref.rfind("javascript:", 0) == 0) {
        return {};
    }
    if (ref.rfind("http://", 0) == 0 || ref.rfind("https://", 0) == 0) {
        return std::string(ref);
    }
    const auto scheme_end = base.find("://");
    if (scheme_end == std::string_view::npos) {
        return std::string(ref);
    }
    if (ref.rfind("//", 0) == 0) {
        return std::string(base.substr(0, scheme_end + 1)) + std::string(ref);
    }
    const auto path_start = base.find('/', scheme_end + 3);
    const std::string origin(base.substr(0, path_start));
    if (ref.front() == '/') {
        return origin + std::string(ref);
    }
    std::string path = path_start == std::string_view::npos ? "/" : std::string(base.substr(path_start));
    path = path.substr(0, path.find_first_of("?#"));
    path = path.substr(0, path.rfind('/') + 1);
    return origin + path + std::string(ref);
}

std::optional<RetrievedDocument> clean_document(std::string_view raw_html, std::string_view url) {
    const std::string html = utf8::encode(utf8::decode(raw_html));
    Builder b;
    b.url = std::string(url);
    parse(html, b);

    std::string text;
    int gap = 0;
    for (const auto& [line_gap, line] : b.lines) {
        gap = std::max(gap, line_gap);
        const std::string cleaned = clean_line(line);
        if (cleaned.empty()) {
            continue;
        }
        if (!text.empty()) {
            text += gap >= 2 ? "\n\n" : "\n";
        }
        text += cleaned;
        gap = 0;
    }
    if (text.empty()) {
        return std::nullopt;
    }
    RetrievedDocument doc;
    doc.url = std::string(url);
    doc.clean_text = std::move(text);
    for (const std::string* t : {&b.og_title, &b.title_tag, &b.h1}) {
        const auto cleaned = clean_line(*t);
        if (!cleaned.empty()) {
            doc.title = cleaned;
            break;
        }
    }
    doc.report_time = b.meta_time ? b.meta_time : b.time_tag;
    doc.images = std::move(b.images);
    return doc;
}

} // namespace qsearch::retrieval
