#include <doctest.h>

#include <random>

#include "qsearch/core/utf8.hpp"
#include "qsearch/retrieval/chunker.hpp"

using namespace qsearch;
using namespace qsearch::retrieval;

TEST_CASE("short text is one chunk") {
    const std::string text(300, 'x');
    const auto c = chunk_text(text, 350, 87);
    REQUIRE(c.size() == 1);
    CHECK(c[0].char_range == CharRange{0, 300});
}

TEST_CASE("character fallback strides by size minus overlap") {
    const std::string text(700, 'a');
    const auto c = chunk_text(text, 350, 87);
    // Oracle: windows of 350 starting every 350 - 87 = 263 until the end is covered.
    std::vector<CharRange> expected;
    for (std::size_t s = 0;; s += 263) {
        expected.push_back({s, std::min<std::size_t>(s + 350, 700)});
        if (s + 350 >= 700) {
            break;
        }
    }
    REQUIRE(c.size() == expected.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i].char_range == expected[i]);
    }
    CHECK(c[1].char_range.start == 263);
    CHECK(c[2].char_range.start == 526);
}

TEST_CASE("paragraph boundary wins") {
    const std::string p1(200, 'p');
    const std::string p2(200, 'q');
    const auto c = chunk_text(p1 + "\n\n" + p2, 350, 87);
    REQUIRE(c.size() == 2);
    CHECK(utf8::trim(c[0].text) == p1);
    CHECK(utf8::trim(c[1].text) == p2);
}

TEST_CASE("offsets count code points") {
    std::string text;
    for (int i = 0; i < 120; ++i) {
        text += "汉字测试。";
    }
    const auto c = chunk_text(text, 350, 87);
    for (const auto& p : c) {
        CHECK(p.char_range.size() <= 350);
        CHECK(utf8::substr(text, p.char_range.start, p.char_range.end) == p.text);
    }
}

TEST_CASE("config-driven chunking sets the parent document") {
    RetrievedDocument doc;
    doc.doc_index = 4;
    doc.clean_text = std::string(500, 'z');
    const auto c = chunk_document(doc, PipelineConfig{});
    REQUIRE(c.size() == 2);
    CHECK(c[0].parent_doc == 4);
    CHECK(c[1].char_range.start == 263);
}

TEST_CASE("property: bound, order and exact coverage on random texts") {
    std::mt19937 rng(11);
    const std::vector<std::string> atoms{"word", "alpha", "b", "汉字", "é", ".", "!", "。", " ", " ", "\n", "\n\n"};
    for (int trial = 0; trial < 60; ++trial) {
        std::string text = "x";
        std::size_t text_len = 1;
        const std::size_t target = trial < 50 ? 1 + rng() % 3000 : 100000;
        while (text_len < target) {
            const auto& a = atoms[rng() % atoms.size()];
            const bool space = a == " " || a == "\n" || a == "\n\n";
            if (space && (text.back() == ' ' || text.back() == '\n')) {
                continue;
            }
            text += a;
            text_len += utf8::length(a);
        }
        text += "y";
        const std::size_t size = trial % 3 == 0 ? 50 : 350;
        const std::size_t overlap = size / 4;
        const auto chunks = chunk_text(text, size, overlap);
        const std::size_t len = utf8::length(text);
        std::size_t covered = 0;
        std::size_t prev_start = 0;
        std::string rebuilt;
        const std::u32string cps = utf8::decode(text);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& r = chunks[i].char_range;
            CHECK(r.size() <= size);
            if (i > 0) {
                CHECK(r.start > prev_start);
                CHECK(r.start <= covered);
            } else {
                CHECK(r.start == 0);
            }
            if (r.end > covered) {
                rebuilt += utf8::encode(std::u32string_view(cps).substr(covered, r.end - covered));
                covered = r.end;
            }
            prev_start = r.start;
        }
        CHECK(covered == len);
        CHECK(rebuilt == text);
    }
}
