#include "qsearch/generation/segmenter.hpp"

#include "qsearch/core/assets.hpp"
#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::generation {

namespace {

bool is_wide_terminator(char32_t c) { return c == U'。' || c == U'！' || c == U'？'; }

bool is_ascii_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

bool is_closer(char32_t c) {
    return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == U'”' || c == U'’' || c == U'）' ||
           c == U'」' || c == U'』' || c == U'*';
}

} // namespace

bool SentenceSegmenter::abbreviation_before(std::size_t dot) const {
    std::size_t b = dot;
    while (b > start_ && (utf8::is_alnum(text_[b - 1]) || text_[b - 1] == U'.')) {
        --b;
    }
    if (b == dot) {
        return false;
    }
    const std::string word = utf8::to_lower(utf8::encode(std::u32string_view(text_).substr(b, dot - b)));
    return assets::abbreviations().count(word) != 0;
}

bool SentenceSegmenter::has_content(std::size_t end) const {
    for (std::size_t i = start_; i < end; ++i) {
        if (!utf8::is_space(text_[i])) {
            return true;
        }
    }
    return false;
}

void SentenceSegmenter::release(std::size_t end, std::vector<Sentence>& out) {
    Sentence s;
    s.index = next_index_++;
    s.range = {start_, end};
    s.text = utf8::encode(std::u32string_view(text_).substr(start_, end - start_));
    out.push_back(std::move(s));
    start_ = end;
}

std::vector<Sentence> SentenceSegmenter::feed(std::string_view delta) {
    if (finished_) {
        throw ContractViolation("SentenceSegmenter::feed after finish");
    }
    std::vector<Sentence> out;
    const std::size_t from = text_.size();
    text_ += utf8::decode(delta);
    for (std::size_t i = from; i < text_.size(); ++i) {
        const char32_t c = text_[i];
        switch (state_) {
        case State::Confirmed:
            if (utf8::is_space(c)) {
                continue;
            }
            release(candidate_, out);
            state_ = State::Normal;
            break;
        case State::AfterTerminator:
            if (is_closer(c) || is_ascii_terminator(c) || is_wide_terminator(c)) {
                candidate_ = i + 1;
                wide_terminator_ = wide_terminator_ || is_wide_terminator(c);
                continue;
            }
            if (utf8::is_space(c)) {
                state_ = State::Confirmed;
                continue;
            }
            if (wide_terminator_) {
                release(candidate_, out);
            }
            state_ = State::Normal;
            break;
        case State::Normal:
            break;
        }
        if (c == U'\n' && has_content(i)) {
            state_ = State::Confirmed;
            candidate_ = i;
        } else if (is_wide_terminator(c)) {
            state_ = State::AfterTerminator;
            wide_terminator_ = true;
            candidate_ = i + 1;
        } else if (is_ascii_terminator(c) && !(c == U'.' && abbreviation_before(i))) {
            state_ = State::AfterTerminator;
            wide_terminator_ = false;
            candidate_ = i + 1;
        }
    }
    return out;
}

std::vector<Sentence> SentenceSegmenter::finish() {
    std::vector<Sentence> out;
    if (finished_) {
        return out;
    }
    finished_ = true;
    if (start_ < text_.size()) {
        release(text_.size(), out);
    }
    return out;
}

std::vector<Sentence> split_sentences(std::string_view text) {
    SentenceSegmenter seg;
    auto out = seg.feed(text);
    for (auto& s : seg.finish()) {
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace qsearch::generation
