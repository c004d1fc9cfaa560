#include <doctest.h>

#include <algorithm>
#include <map>

#include "app_world.hpp"
#include "qsearch/app/session.hpp"
#include "qsearch/core/errors.hpp"
#include "qsearch/core/prompts.hpp"

using namespace qsearch;
using namespace qsearch::app;
using qsearch::testing::AppWorld;
using qsearch::testing::RecordedEvent;
using qsearch::testing::recorder;
using json = nlohmann::json;

namespace {

std::map<std::string, int> counts(const std::vector<RecordedEvent>& events) {
    std::map<std::string, int> c;
    for (const auto& e : events) ++c[e.name];
    return c;
}

std::size_t position(const std::vector<RecordedEvent>& events, std::string_view name, std::size_t index) {
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].name != name) continue;
        const auto& d = events[i].data;
        const auto& key = name == event::kSentence ? d.at("index") : d.at("sentence_index");
        if (key.get<std::size_t>() == index) return i;
    }
    return events.size();
}

} // namespace

TEST_CASE("a search emits the full event sequence") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    std::vector<RecordedEvent> events;
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"), recorder(events));

    CHECK(s.status == "ok");
    REQUIRE(s.final_answer);
    const auto c = counts(events);
    CHECK(c.at("meta") == 1);
    CHECK(c.at("timeline") == 1);
    CHECK(c.at("images") == 1);
    CHECK(c.at("done") == 1);
    CHECK(c.count("error") == 0);
    CHECK(events.front().name == "meta");
    CHECK(events.back().name == "done");
    CHECK(events.front().data.at("schema_version") == kEventSchemaVersion);

    const std::size_t n = s.final_answer->sentences.size();
    REQUIRE(n > 0);
    CHECK(static_cast<std::size_t>(c.at("sentence")) == n);
    CHECK(static_cast<std::size_t>(c.at("citation")) == n);
    CHECK(s.citations.size() == n);
    const std::size_t done_at = events.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto sent = position(events, event::kSentence, i);
        const auto cit = position(events, event::kCitation, i);
        CHECK(sent < cit);
        CHECK(cit < done_at);
    }

    std::string streamed;
    for (const auto& e : events) {
        if (e.name == "answer") streamed += e.data.at("delta").get<std::string>();
    }
    CHECK(streamed == s.final_answer->text);
}

TEST_CASE("documents are indexed contiguously and citations reference them") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"));
    REQUIRE(s.documents.size() == 3);
    for (std::size_t i = 0; i < s.documents.size(); ++i) CHECK(s.documents[i].doc_index == static_cast<int>(i) + 1);
    for (const auto& c : s.citations) {
        if (c.doc_index) CHECK((*c.doc_index >= 1 && *c.doc_index <= 3));
    }
    const auto cited = std::count_if(s.citations.begin(), s.citations.end(), [](const auto& c) { return c.doc_index; });
    CHECK(cited > 0);
    // The page without a body falls back to its search snippet.
    CHECK(s.documents[2].clean_text == "Anglers report salmon returning to the Lune river.");
    for (const auto& img : s.documents[0].images) CHECK(img.parent_doc == 1);
}

TEST_CASE("timeline and images come from the retrieved pages") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"));
    std::size_t events = 0;
    for (const auto& g : s.timeline) events += g.events.size();
    CHECK(events > 0);
    for (const auto& p : s.images) CHECK(p.image.alt_text.find("logo") == std::string::npos);
}

TEST_CASE("stage timings fit inside the wall time") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"));
    double sum = 0;
    std::vector<std::string> names;
    for (const auto& t : s.timings) {
        sum += t.ms;
        names.push_back(t.stage);
        CHECK(t.ms >= 0);
    }
    CHECK(sum <= s.wall_ms);
    CHECK(names == std::vector<std::string>{"analyze", "rewrite", "plan", "retrieve", "generate", "synthesize",
                                            "finalize"});
}

TEST_CASE("identical runs give identical transcripts") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    const json a = pipeline.run(AppWorld::input("Lune river clean-up"));
    const json b = pipeline.run(AppWorld::input("Lune river clean-up"));
    CHECK(a.at("session_id") != b.at("session_id"));
    CHECK(canonical_transcript(a) == canonical_transcript(b));
}

TEST_CASE("no documents ends with RETRIEVAL_EMPTY") {
    AppWorld world(false);
    Pipeline pipeline(world.deps());
    std::vector<RecordedEvent> events;
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"), recorder(events));
    CHECK(s.status == "error");
    REQUIRE(s.error);
    CHECK(s.error->code == "RETRIEVAL_EMPTY");
    REQUIRE_FALSE(events.empty());
    CHECK(events.back().name == "error");
    CHECK(events.back().data.at("code") == "RETRIEVAL_EMPTY");
    CHECK(counts(events).count("done") == 0);
}

TEST_CASE("refused queries stop before retrieval") {
    AppWorld world;
    world.reply(prompts::kIntentRefusal, "find someone's home address",
                R"({"Refusal": "Yes", "Category": "privacy breaches"})");
    Pipeline pipeline(world.deps());
    std::vector<RecordedEvent> events;
    const auto s = pipeline.run(AppWorld::input("find someone's home address"), recorder(events));
    CHECK(s.status == "refused");
    REQUIRE(events.size() == 1);
    CHECK(events[0].name == "error");
    CHECK(events[0].data.at("code") == "REFUSED");
    CHECK(events[0].data.at("category") == "privacy breaches");
    CHECK(events[0].data.at("message") == std::string(preproc::kRefusalMessage));
    CHECK(world.source->search_count() == 0);
}

TEST_CASE("a chosen clarification option reaches the search") {
    AppWorld world;
    Pipeline pipeline(world.deps());
    auto in = AppWorld::input("Lune");
    in.chosen_option = "river";
    const auto s = pipeline.run(in);
    CHECK(s.effective_query == preproc::apply_clarification("Lune", "river"));
    CHECK(s.rewritten_query == s.effective_query);
}

TEST_CASE("failed answer generation ends with GENERATION_UNAVAILABLE") {
    AppWorld world;
    world.gateway->set_fault_hook([](gateway::CallKind, const gateway::ChatRequest* req) {
        if (req != nullptr && req->template_id == prompts::kEncyclopediaQa) throw TransportError("model down");
    });
    Pipeline pipeline(world.deps());
    std::vector<RecordedEvent> events;
    const auto s = pipeline.run(AppWorld::input("Lune river clean-up"), recorder(events));
    CHECK(s.status == "error");
    REQUIRE(s.error);
    CHECK(s.error->code == "GENERATION_UNAVAILABLE");
    CHECK(events.back().data.at("code") == "GENERATION_UNAVAILABLE");
}

TEST_CASE("a warm cache avoids page fetches") {
    AppWorld world;
    DocumentCache cache(world.dir.path() / "cache.json", std::chrono::seconds(900));
    Pipeline pipeline(world.deps(&cache));
    const json first = pipeline.run(AppWorld::input("Lune river clean-up"));
    const auto fetches = world.source->total_page_fetches();
    CHECK(fetches == 3);
    const json second = pipeline.run(AppWorld::input("Lune river clean-up"));
    CHECK(world.source->total_page_fetches() == fetches + 1); // only the snippet-only page is retried
    CHECK(canonical_transcript(first).at("final_answer") == canonical_transcript(second).at("final_answer"));
}

TEST_CASE("pipeline construction validates its inputs") {
    AppWorld world;
    auto d = world.deps();
    d.sources.clear();
    CHECK_THROWS_AS(Pipeline{d}, ConfigError);
    d = world.deps();
    d.gateway = nullptr;
    CHECK_THROWS_AS(Pipeline{d}, ConfigError);
    d = world.deps();
    d.config.dedup_threshold = 2.0;
    CHECK_THROWS_AS(Pipeline{d}, ConfigError);
    Pipeline ok(world.deps());
    CHECK_THROWS_AS(ok.run(AppWorld::input("   ")), ContractViolation);
}
