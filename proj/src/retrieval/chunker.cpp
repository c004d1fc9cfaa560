#include "qsearch/retrieval/chunker.hpp"

#include <deque>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::retrieval {

namespace {

enum class Sep { Paragraph, Line, Sentence, Space, Char };

constexpr Sep kSeparators[] = {Sep::Paragraph, Sep::Line, Sep::Sentence, Sep::Space, Sep::Char};

struct Span {
    std::size_t start;
    std::size_t end;
    std::size_t size() const { return end - start; }
};

bool is_sentence_end(char32_t c) {
    return c == U'。' || c == U'！' || c == U'？' || c == U'.' || c == U'!' || c == U'?';
}

// Length of the separator occurrence at `i`, or 0.
std::size_t separator_at(const std::u32string& t, std::size_t i, std::size_t end, Sep sep) {
    switch (sep) {
    case Sep::Paragraph:
        return i + 1 < end && t[i] == U'\n' && t[i + 1] == U'\n' ? 2 : 0;
    case Sep::Line:
        return t[i] == U'\n' ? 1 : 0;
    case Sep::Sentence:
        return is_sentence_end(t[i]) ? 1 : 0;
    case Sep::Space:
        return t[i] == U' ' ? 1 : 0;
    case Sep::Char:
        return 1;
    }
    return 0;
}

bool contains(const std::u32string& t, Span s, Sep sep) {
    for (std::size_t i = s.start; i < s.end; ++i) {
        if (separator_at(t, i, s.end, sep) > 0) {
            return true;
        }
    }
    return false;
}

std::vector<Span> split_keep_end(const std::u32string& t, Span s, Sep sep) {
    std::vector<Span> out;
    std::size_t piece = s.start;
    for (std::size_t i = s.start; i < s.end;) {
        const std::size_t len = separator_at(t, i, s.end, sep);
        if (len == 0) {
            ++i;
            continue;
        }
        i += len;
        out.push_back({piece, i});
        piece = i;
    }
    if (piece < s.end) {
        out.push_back({piece, s.end});
    }
    return out;
}

class Splitter {
public:
    Splitter(const std::u32string& text, std::size_t size, std::size_t overlap)
        : t_(text), size_(size), overlap_(overlap) {}

    void split(Span s, std::size_t first_sep, std::vector<Span>& out) const {
        std::size_t k = first_sep;
        while (k + 1 < std::size(kSeparators) && !contains(t_, s, kSeparators[k])) {
            ++k;
        }
        const bool last = k + 1 >= std::size(kSeparators);
        std::vector<Span> good;
        for (const Span piece : split_keep_end(t_, s, kSeparators[k])) {
            if (piece.size() < size_) {
                good.push_back(piece);
                continue;
            }
            merge(good, out);
            good.clear();
            if (last) {
                out.push_back(piece);
            } else {
                split(piece, k + 1, out);
            }
        }
        merge(good, out);
    }

private:
    void emit(const std::deque<Span>& cur, std::vector<Span>& out) const {
        const Span s{cur.front().start, cur.back().end};
        bool blank = true;
        for (std::size_t i = s.start; i < s.end && blank; ++i) {
            blank = utf8::is_space(t_[i]);
        }
        if (blank && !out.empty() && out.back().end == s.start && out.back().size() + s.size() <= size_) {
            out.back().end = s.end;
            return;
        }
        out.push_back(s);
    }

    void merge(const std::vector<Span>& pieces, std::vector<Span>& out) const {
        std::deque<Span> cur;
        std::size_t total = 0;
        for (const Span piece : pieces) {
            const std::size_t len = piece.size();
            if (total + len > size_ && !cur.empty()) {
                emit(cur, out);
                while (total > overlap_ || (total + len > size_ && total > 0)) {
                    total -= cur.front().size();
                    cur.pop_front();
                }
            }
            cur.push_back(piece);
            total += len;
        }
        if (!cur.empty()) {
            emit(cur, out);
        }
    }

    const std::u32string& t_;
    std::size_t size_;
    std::size_t overlap_;
};

} // namespace

std::vector<Passage> chunk_text(std::string_view text, std::size_t chunk_size, std::size_t overlap) {
    if (chunk_size == 0 || overlap >= chunk_size) {
        throw ContractViolation("chunk_text: require 0 <= overlap < chunk_size");
    }
    const std::u32string cps = utf8::decode(text);
    std::vector<Span> spans;
    Splitter(cps, chunk_size, overlap).split({0, cps.size()}, 0, spans);
    std::vector<Passage> out;
    out.reserve(spans.size());
    for (const Span s : spans) {
        Passage p;
        p.char_range = {s.start, s.end};
        p.text = utf8::encode(std::u32string_view(cps).substr(s.start, s.size()));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> chunk_document(const RetrievedDocument& doc, const PipelineConfig& cfg) {
    auto out = chunk_text(doc.clean_text, static_cast<std::size_t>(cfg.chunk_size),
                          static_cast<std::size_t>(cfg.chunk_overlap()));
    for (auto& p : out) {
        p.parent_doc = doc.doc_index;
    }
    return out;
}

} // namespace qsearch::retrieval
