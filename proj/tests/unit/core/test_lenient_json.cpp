#include <doctest.h>

#include "qsearch/core/lenient_json.hpp"

using namespace qsearch;

TEST_CASE("strict JSON passes through") {
    auto j = parse_lenient_json(R"({"a": [1, 2], "b": "x"})");
    REQUIRE(j);
    CHECK((*j)["a"][1] == 2);
}

TEST_CASE("python dict literal with booleans") {
    auto j = parse_lenient_json(
        "{'is_complex': True, 'sub_queries': ['What is it?', \"Who's there?\"], 'parent_child': [], 'x': None}");
    REQUIRE(j);
    CHECK((*j)["is_complex"] == true);
    CHECK((*j)["sub_queries"][1] == "Who's there?");
    CHECK((*j)["x"].is_null());
}

TEST_CASE("fences, prose and trailing commas") {
    auto j = parse_lenient_json("Sure! Here it is:\n```json\n{\"k\": [1, 2,],}\n```\nThanks.");
    REQUIRE(j);
    CHECK((*j)["k"].size() == 2);
}

TEST_CASE("top-level list") {
    auto j = parse_lenient_json("Questions: [\"a?\", \"b?\"]");
    REQUIRE(j);
    CHECK(j->is_array());
    CHECK(j->size() == 2);
}

TEST_CASE("garbage yields nullopt") {
    CHECK_FALSE(parse_lenient_json("no json here"));
    CHECK_FALSE(parse_lenient_json("{unbalanced"));
}

TEST_CASE("lenient booleans") {
    CHECK(lenient_bool(nlohmann::json("Yes")) == true);
    CHECK(lenient_bool(nlohmann::json("no")) == false);
    CHECK(lenient_bool(nlohmann::json(true)) == true);
    CHECK(lenient_bool(nlohmann::json("False")) == false);
    CHECK_FALSE(lenient_bool(nlohmann::json("maybe")).has_value());
}
