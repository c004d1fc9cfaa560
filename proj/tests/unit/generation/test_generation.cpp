#include <doctest.h>

#include <random>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/core/utf8.hpp"
#include "qsearch/gateway/stub_gateway.hpp"
#include "qsearch/generation/generation.hpp"
#include "test_support.hpp"

using namespace qsearch;
using namespace qsearch::generation;
using qdg::NodeId;

namespace {

Passage passage(std::string text) {
    Passage p;
    p.text = std::move(text);
    return p;
}

std::vector<std::size_t> boundaries_of(std::string_view text) {
    std::vector<std::size_t> out;
    for (const auto& s : split_sentences(text)) {
        out.push_back(s.range.end);
    }
    return out;
}

struct Fixture {
    testing::TempDir dir;
    std::unique_ptr<gateway::StubGateway> gw;

    explicit Fixture(gateway::StubOptions o = {}) {
        o.fixture_dir = dir.path();
        gw = std::make_unique<gateway::StubGateway>(o);
    }
    void answer(std::string_view tmpl, std::string_view key, const std::string& body) {
        dir.write(gateway::fixture_relpath(tmpl, key), body);
    }
};

const gateway::CallRecord& call_for(const std::vector<gateway::CallRecord>& log, std::string_view key) {
    for (const auto& r : log) {
        if (r.key_input == key) {
            return r;
        }
    }
    FAIL("no call for " << key);
    return log.front();
}

} // namespace

TEST_CASE("root prompt numbers materials and leaves Q&A empty") {
    const auto p = build_node_prompt(0, "What is X?", {}, {passage("First passage."), passage("Second\npassage.")});
    CHECK(p.rendered.find("Question: What is X?") != std::string::npos);
    CHECK(p.rendered.find("[1] First passage.\n[2] Second passage.") != std::string::npos);
    const auto qa = p.rendered.find("Related Q&A:\n");
    const auto refs = p.rendered.find("Reference materials:");
    REQUIRE(qa != std::string::npos);
    CHECK(utf8::trim(p.rendered.substr(qa + 13, refs - qa - 13)).empty());
    CHECK(p.rendered.find("{Sub-Query}") == std::string::npos);
    CHECK(p.rendered.find("{Retrieved Passage") == std::string::npos);
}

TEST_CASE("ancestor Q&A precedes the materials") {
    const auto p = build_node_prompt(1, "When did B happen?", {{"What is A?", "A is a thing."}}, {passage("ref")});
    const auto qa = p.rendered.find("What is A?\nA is a thing.");
    const auto refs = p.rendered.find("[1] ref");
    REQUIRE(qa != std::string::npos);
    REQUIRE(refs != std::string::npos);
    CHECK(qa < refs);
    CHECK_THROWS_AS(build_node_prompt(1, "q", {{"What is A?", std::nullopt}}, {}), ContractViolation);
}

TEST_CASE("no passages yields the marker line") {
    const auto p = build_node_prompt(0, "q", {}, {});
    CHECK(p.rendered.find("Reference materials:\n" + std::string(prompts::kNoReferencesMarker) + "\n") !=
          std::string::npos);
    CHECK(gateway::StubGateway::fallback_response({"encyclopedia_qa", "q", p.rendered}) ==
          "No reliable information was found for this question.");
}

TEST_CASE("sentence boundary examples") {
    CHECK(boundaries_of("Yes. No.") == std::vector<std::size_t>{4, 8});
    CHECK(split_sentences("Pi is 3.14. Done.").size() == 2);
    CHECK(boundaries_of("你好。再见。") == std::vector<std::size_t>{3, 6});
    CHECK(split_sentences("Dr. Smith met Mr. Jones, e.g. at noon. Then left.").size() == 2);
    CHECK(split_sentences("He said \"stop.\" Then ran!").size() == 2);
    CHECK(split_sentences("Wait... what?! Fine.").size() == 3);
    CHECK(split_sentences("## Heading\n- item one\n- item two").size() == 3);
    CHECK(split_sentences("").empty());
    const auto trailing = split_sentences("One. Two.  ");
    REQUIRE(trailing.size() == 2);
    CHECK(trailing[1].range == CharRange{4, 11});
}

TEST_CASE("property: segmentation partitions the text regardless of delta split") {
    std::mt19937 rng(9);
    const std::vector<std::string> atoms{"word", "Dr.", "3.14", ".", "!", "?", "。", "好", " ", "\n", "\"", "e.g."};
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        const std::size_t n = rng() % 40;
        for (std::size_t i = 0; i < n; ++i) {
            text += atoms[rng() % atoms.size()];
        }
        const auto whole = split_sentences(text);
        SentenceSegmenter seg;
        std::vector<Sentence> streamed;
        const auto cps = utf8::decode(text);
        for (std::size_t i = 0; i < cps.size();) {
            const std::size_t len = 1 + rng() % 5;
            for (auto& s : seg.feed(utf8::encode(std::u32string_view(cps).substr(i, len)))) {
                streamed.push_back(s);
            }
            i += len;
        }
        for (auto& s : seg.finish()) {
            streamed.push_back(s);
        }
        REQUIRE(streamed.size() == whole.size());
        std::string rebuilt;
        std::size_t prev = 0;
        for (std::size_t i = 0; i < whole.size(); ++i) {
            CHECK(streamed[i].range == whole[i].range);
            CHECK(whole[i].index == i);
            CHECK(whole[i].range.start == prev);
            CHECK(whole[i].range.end > whole[i].range.start);
            prev = whole[i].range.end;
            rebuilt += whole[i].text;
        }
        CHECK(rebuilt == text);
        if (!whole.empty()) {
            CHECK(whole.back().range.end == cps.size());
        }
    }
}

TEST_CASE("answer_node streams deltas and sentences") {
    Fixture f;
    f.answer(prompts::kEncyclopediaQa, "q", "Yes. No.");
    std::vector<std::size_t> seen;
    std::string deltas;
    StreamCallbacks cb{[&](std::string_view d) { deltas += d; },
                       [&](const Sentence& s) { seen.push_back(s.range.end); }};
    const auto a = answer_node(build_node_prompt(0, "q", {}, {}), *f.gw, {}, cb);
    CHECK(a.text == "Yes. No.");
    CHECK(deltas == a.text);
    CHECK(a.deltas.size() >= 2);
    CHECK(a.sentence_boundaries() == std::vector<std::size_t>{4, 8});
    CHECK(seen == a.sentence_boundaries());
    CHECK_FALSE(a.failed);
}

TEST_CASE("mid-stream failure keeps the partial answer") {
    Fixture f;
    f.answer(prompts::kEncyclopediaQa, "q", "One two three four five six seven eight nine.");
    f.gw->set_delta_hook([](const gateway::ChatRequest&, std::size_t i) {
        if (i == 1) {
            throw TransportError("connection reset");
        }
    });
    Diagnostics diag;
    const auto a = answer_node(build_node_prompt(0, "q", {}, {}), *f.gw, {}, {}, &diag);
    CHECK(a.failed);
    CHECK(a.text == "One two three ");
    CHECK(f.gw->call_log().count_template(prompts::kEncyclopediaQa) == 1);
    CHECK(diag.size() == 1);
}

TEST_CASE("terminal graph: one generation call, final equals node answer") {
    Fixture f;
    f.answer(prompts::kEncyclopediaQa, "capital of France", "Paris is the capital.");
    auto g = qdg::Qdg::terminal("capital of France");
    const auto answers = answer_graph(g, [](NodeId) { return std::vector<Passage>{}; }, *f.gw, {});
    const auto final = synthesize_final(g, answers, *f.gw, {});
    CHECK(final.text == "Paris is the capital.");
    CHECK(final.node == kFinalNode);
    CHECK(f.gw->call_log().count(gateway::CallKind::Chat) == 1);
    CHECK(g.node(0).answer == std::optional<std::string>("Paris is the capital."));
}

TEST_CASE("two leaves are synthesized in topological order") {
    Fixture f;
    f.answer(prompts::kEncyclopediaQa, "What is the area of NJ?", "About 8,700 square miles.");
    f.answer(prompts::kEncyclopediaQa, "What is the population of NJ?", "About 9.3 million.");
    std::string synthesis_prompt;
    f.gw->set_fault_hook([&](gateway::CallKind, const gateway::ChatRequest* r) {
        if (r != nullptr && r->template_id == prompts::kFinalSynthesis) {
            synthesis_prompt = r->prompt;
        }
    });
    qdg::Qdg g("area and population of NJ", {{0, "What is the area of NJ?", {}}, {1, "What is the population of NJ?", {}}},
               {});
    const auto answers = answer_graph(g, [](NodeId) { return std::vector<Passage>{}; }, *f.gw, {});
    const auto final = synthesize_final(g, answers, *f.gw, {});
    const auto a = synthesis_prompt.find("What is the area of NJ?\nAbout 8,700 square miles.");
    const auto b = synthesis_prompt.find("What is the population of NJ?\nAbout 9.3 million.");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    CHECK(a < b);
    CHECK(synthesis_prompt.find("Question: area and population of NJ") != std::string::npos);
    CHECK(final.text == "About 8,700 square miles. About 9.3 million.");
}

TEST_CASE("failed leaf is skipped and noted; all failed is an error") {
    Fixture f;
    f.gw->set_fault_hook([](gateway::CallKind, const gateway::ChatRequest* r) {
        if (r != nullptr && r->key_input == "bad?") {
            throw ProviderError("blocked");
        }
    });
    qdg::Qdg g("root", {{0, "good?", {}}, {1, "bad?", {}}}, {});
    auto answers = answer_graph(g, [](NodeId) { return std::vector<Passage>{passage("Good answer here.")}; }, *f.gw, {});
    CHECK(answers.at(1).failed);
    const auto final = synthesize_final(g, answers, *f.gw, {});
    REQUIRE(final.notes.size() == 1);
    CHECK(final.notes[0].find("bad?") != std::string::npos);
    CHECK(final.text == "Good answer here.");

    answers.at(0).failed = true;
    try {
        synthesize_final(g, answers, *f.gw, {});
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.code() == "generation_unavailable");
    }
}

TEST_CASE("children start only after their ancestors finished") {
    gateway::StubOptions o;
    o.call_latency = std::chrono::milliseconds(20);
    Fixture f(o);
    qdg::Qdg g("root", {{0, "A?", {}}, {1, "B?", {}}, {2, "C?", {}}, {3, "D?", {}}}, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    const auto answers = answer_graph(g, [](NodeId) { return std::vector<Passage>{passage("Text.")}; }, *f.gw, {});
    CHECK(answers.size() == 4);
    const auto log = f.gw->call_log().snapshot();
    for (const auto& [p, c] : g.edges()) {
        CHECK(call_for(log, g.node(c).sub_query).start >= call_for(log, g.node(p).sub_query).end);
    }
}

TEST_CASE("nodes in one layer overlap in time") {
    gateway::StubOptions o;
    o.delta_delay = std::chrono::milliseconds(15);
    Fixture f(o);
    f.answer(prompts::kEncyclopediaQa, "X?", "one two three four five six seven eight nine ten");
    f.answer(prompts::kEncyclopediaQa, "Y?", "one two three four five six seven eight nine ten");
    qdg::Qdg g("root", {{0, "X?", {}}, {1, "Y?", {}}}, {});
    answer_graph(g, [](NodeId) { return std::vector<Passage>{}; }, *f.gw, {});
    const auto log = f.gw->call_log().snapshot();
    const auto& x = call_for(log, "X?");
    const auto& y = call_for(log, "Y?");
    CHECK(x.start < y.end);
    CHECK(y.start < x.end);
}

TEST_CASE("descendant prompt carries the ancestor answer") {
    Fixture f;
    f.answer(prompts::kEncyclopediaQa, "What natural disasters occurred in Indonesia in April?", "A flood hit Java.");
    std::string child_prompt;
    f.gw->set_fault_hook([&](gateway::CallKind, const gateway::ChatRequest* r) {
        if (r != nullptr && r->key_input == "How long did this natural disaster last?") {
            child_prompt = r->prompt;
        }
    });
    qdg::Qdg g("root", {{0, "What natural disasters occurred in Indonesia in April?", {}},
                        {1, "How long did this natural disaster last?", {}}},
               {{0, 1}});
    answer_graph(g, [](NodeId) { return std::vector<Passage>{}; }, *f.gw, {});
    CHECK(child_prompt.find("What natural disasters occurred in Indonesia in April?\nA flood hit Java.") !=
          std::string::npos);
}
