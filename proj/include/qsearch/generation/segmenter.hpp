#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qsearch/core/types.hpp"

namespace qsearch::generation {

struct Sentence {
    std::size_t index = 0;
    CharRange range; // code points into the full answer
    std::string text;
};

// Online sentence splitter over a stream of deltas. A sentence ends after
// 。！？ or after .!? followed by whitespace, unless the period closes a
// known abbreviation; a line break also ends a non-empty sentence. Closing
// quotes and brackets stay with the sentence.
// Whitespace between sentences belongs to the following sentence, and the
// last sentence runs to the end of the text, so sentences partition it.
//
// A sentence is released once the next one has started (or at finish()).
class SentenceSegmenter {
public:
    std::vector<Sentence> feed(std::string_view delta);
    std::vector<Sentence> finish();

    const std::u32string& text() const noexcept { return text_; }

private:
    enum class State { Normal, AfterTerminator, Confirmed };

    bool abbreviation_before(std::size_t dot) const;
    bool has_content(std::size_t end) const;
    void release(std::size_t end, std::vector<Sentence>& out);

    std::u32string text_;
    std::size_t start_ = 0;
    std::size_t candidate_ = 0;
    bool wide_terminator_ = false;
    State state_ = State::Normal;
    std::size_t next_index_ = 0;
    bool finished_ = false;
};

// Whole-text convenience wrapper.
std::vector<Sentence> split_sentences(std::string_view text);

} // namespace qsearch::generation
