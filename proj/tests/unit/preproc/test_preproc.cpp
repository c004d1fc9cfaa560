#include <doctest.h>

#include "qsearch/core/prompts.hpp"
#include "qsearch/gateway/stub_gateway.hpp"
#include "qsearch/preproc/preproc.hpp"
#include "test_support.hpp"

using namespace qsearch;
using namespace qsearch::preproc;
using gateway::CallKind;
using gateway::StubGateway;

namespace {

struct Harness {
    testing::TempDir dir;
    std::unique_ptr<StubGateway> gw;

    Harness() {
        gateway::StubOptions o;
        o.fixture_dir = dir.path();
        gw = std::make_unique<StubGateway>(o);
    }
    void fixture(std::string_view tmpl, std::string_view key, const std::string& body) {
        dir.write(gateway::fixture_relpath(tmpl, key), body);
    }
};

} // namespace

TEST_CASE("refusal category four maps to harmful intent") {
    Harness h;
    h.fixture(prompts::kIntentRefusal, "how to poison a neighbour's dog",
              R"({"Refusal": "Yes", "Category": "(4) harmful intent"})");
    Diagnostics diag;
    const auto a = analyze_intent("how to poison a neighbour's dog", *h.gw, &diag);
    CHECK(a.refusal);
    CHECK(a.refusal_category == std::optional<std::string>("harmful intent"));
    CHECK_FALSE(a.needs_clarification);
    CHECK(h.gw->call_log().count_template(prompts::kIntentClarify) == 0);
    const auto wire = to_wire(a);
    CHECK(wire["Refusal"] == "Yes");
    CHECK(wire["message"] == std::string(kRefusalMessage));
}

TEST_CASE("economy query asks for a region") {
    Harness h;
    h.fixture(prompts::kIntentClarify, "The current state of the economy",
              "{'Requires additional input': 'Yes', 'Additional options': {'Prompt description': "
              "'Which region are you interested in?', 'Choices': ['China', 'United States', 'Global']}}");
    const auto a = analyze_intent("The current state of the economy", *h.gw);
    CHECK_FALSE(a.refusal);
    CHECK(a.needs_clarification);
    CHECK(a.options == std::vector<std::string>{"China", "United States", "Global"});
    CHECK(apply_clarification("The current state of the economy", a.options[0]) ==
          "The current state of the economy (China)");
}

TEST_CASE("plain query passes through") {
    Harness h;
    const auto a = analyze_intent("2+2 news today", *h.gw);
    CHECK_FALSE(a.refusal);
    CHECK_FALSE(a.needs_clarification);
    CHECK(a.options.empty());
}

TEST_CASE("unparseable intent output fails open after retries") {
    Harness h;
    h.fixture(prompts::kIntentRefusal, "q", "not json at all");
    h.fixture(prompts::kIntentClarify, "q", "still not json");
    Diagnostics diag;
    const auto a = analyze_intent("q", *h.gw, &diag);
    CHECK_FALSE(a.refusal);
    CHECK_FALSE(a.needs_clarification);
    CHECK(h.gw->call_log().count_template(prompts::kIntentRefusal) == 3);
    CHECK(h.gw->call_log().count_template(prompts::kIntentClarify) == 3);
    CHECK(diag.size() == 2);
}

TEST_CASE("True/False and true/false are both accepted") {
    Harness h;
    h.fixture(prompts::kIntentRefusal, "a", "{'Refusal': True, 'Category': 'privacy breaches'}");
    h.fixture(prompts::kIntentRefusal, "b", R"({"Refusal": false, "Category": ""})");
    CHECK(analyze_intent("a", *h.gw).refusal);
    CHECK_FALSE(analyze_intent("b", *h.gw).refusal);
}

TEST_CASE("intent invariants hold for assorted replies") {
    const std::vector<std::pair<std::string, std::string>> replies{
        {R"({"Refusal": "Yes", "Category": "something odd"})", ""},
        {R"({"Refusal": "No"})", R"({"Requires additional input": "Yes", "Additional options": {"Choices": []}})"},
        {R"({"Refusal": "No"})", R"({"Requires additional input": "Yes", "Additional options": {"Choices": ["x"]}})"},
        {"garbage", "garbage"},
    };
    for (const auto& [refusal, clarify] : replies) {
        Harness h;
        h.fixture(prompts::kIntentRefusal, "q", refusal);
        if (!clarify.empty()) {
            h.fixture(prompts::kIntentClarify, "q", clarify);
        }
        const auto a = analyze_intent("q", *h.gw);
        if (a.refusal) {
            CHECK(a.refusal_category.has_value());
            CHECK_FALSE(a.needs_clarification);
        }
        if (a.needs_clarification) {
            CHECK_FALSE(a.options.empty());
        }
    }
}

TEST_CASE("category normalization") {
    CHECK(normalize_category("Privacy Breaches") == "privacy breaches");
    CHECK(normalize_category("(7)") == "misinformation");
    CHECK(normalize_category("planning and consulting") == "planning and consulting inquiries");
    for (const auto c : kRefusalCategories) {
        CHECK(normalize_category(c) == c);
    }
}

TEST_CASE("empty query is a contract violation") {
    Harness h;
    CHECK_THROWS_AS(analyze_intent("   ", *h.gw), ContractViolation);
}

TEST_CASE("rewrite resolves relative time from fixture") {
    Harness h;
    const auto ctx = UserContext::at("2025-02-05T10:00:00+08:00", "Shanghai");
    REQUIRE(ctx);
    h.fixture(prompts::kQueryRewrite, "Shanghai news from last week",
              "Shanghai news from 2025-01-27 to 2025-02-02\n");
    const auto out = rewrite_query("Shanghai news from last week", *ctx, *h.gw);
    CHECK(out == "Shanghai news from 2025-01-27 to 2025-02-02");
    const auto calls = h.gw->call_log().snapshot();
    REQUIRE(calls.size() == 1);
}

TEST_CASE("rewrite prompt carries local time and location") {
    const auto ctx = UserContext::at("2025-02-05T10:00:00+08:00", "Shanghai");
    REQUIRE(ctx);
    CHECK(ctx->local_time_iso() == "2025-02-05T10:00:00+08:00");
    CHECK(ctx->local_date() == "2025-02-05");
    const auto tmpl = prompts::template_text(prompts::kQueryRewrite);
    const auto filled = prompts::fill(tmpl, {{"Local Time", ctx->local_time_iso()}, {"Location", "Shanghai"},
                                             {"Query", "q"}});
    CHECK(filled.find("2025-02-05T10:00:00+08:00") != std::string::npos);
}

TEST_CASE("rewrite with absolute dates or empty reply echoes the input") {
    Harness h;
    const auto ctx = UserContext::at("2025-02-05T10:00:00Z");
    REQUIRE(ctx);
    const std::string q = "Eclipse coverage on 2024-04-08";
    CHECK(rewrite_query(q, *ctx, *h.gw) == q);
    CHECK(rewrite_query(q, *ctx, *h.gw) == q);
    h.fixture(prompts::kQueryRewrite, "blank", "   \n");
    Diagnostics diag;
    CHECK(rewrite_query("blank", *ctx, *h.gw, &diag) == "blank");
    CHECK(diag.size() == 1);
}

TEST_CASE("user context json round trip") {
    const nlohmann::json j{{"local_time", "2025-02-05T10:00:00-05:30"}, {"location", "Boston"}};
    const auto c = j.get<UserContext>();
    CHECK(c.utc_offset_minutes == -330);
    CHECK(nlohmann::json(c)["local_time"] == "2025-02-05T10:00:00-05:30");
    CHECK_FALSE(UserContext::at("not a time"));
}
