#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/prompts.hpp"
#include "qsearch/gateway/stub_gateway.hpp"
#include "qsearch/ranking/ranking.hpp"
#include "test_support.hpp"

using namespace qsearch;
using namespace qsearch::ranking;

namespace {

Passage passage(std::string text, std::optional<std::vector<double>> emb = {}) {
    Passage p;
    p.text = std::move(text);
    if (emb) {
        p.embedding = Embedding::normalized(*emb);
    }
    return p;
}

std::vector<double> random_unit(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) {
        x = n(rng);
    }
    return v;
}

// Largest set of indices with all pairwise sims below the threshold.
std::vector<std::size_t> brute_force_mis(const std::vector<std::vector<double>>& sim, double threshold) {
    const std::size_t n = sim.size();
    std::vector<std::size_t> best;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<std::size_t> set;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if ((mask >> i & 1u) == 0) {
                continue;
            }
            for (std::size_t j : set) {
                ok = ok && sim[i][j] < threshold;
            }
            set.push_back(i);
        }
        if (ok && set.size() > best.size()) {
            best = set;
        }
    }
    return best;
}

gateway::StubGateway stub(const std::filesystem::path& dir = {}) {
    gateway::StubOptions o;
    o.fixture_dir = dir;
    return gateway::StubGateway(o);
}

} // namespace

TEST_CASE("identical passages collapse to the first") {
    std::vector<Passage> ps{passage("a", {{1, 0}}), passage("b", {{1, 0}}), passage("c", {{1, 0}})};
    const auto kept = deduplicate(ps, 0.8);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].text == "a");
}

TEST_CASE("dedup keeps the unique maximum independent set of the triangle example") {
    const double y = 0.05 / std::sqrt(0.19);
    const std::vector<std::vector<double>> vecs{
        {1, 0, 0}, {0.9, std::sqrt(0.19), 0}, {0.5, y, std::sqrt(1 - 0.25 - y * y)}};
    std::vector<Passage> ps;
    std::vector<Embedding> embs;
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        ps.push_back(passage(std::to_string(i + 1), vecs[i]));
        embs.push_back(*ps.back().embedding);
    }
    std::vector<std::vector<double>> sim(3, std::vector<double>(3));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            sim[i][j] = cosine_similarity(embs[i], embs[j]);
        }
    }
    CHECK(sim[0][1] == doctest::Approx(0.9));
    CHECK(sim[0][2] == doctest::Approx(0.5));
    CHECK(sim[1][2] == doctest::Approx(0.5));
    const auto kept = deduplicate(ps, 0.8);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].text == "1");
    CHECK(kept[1].text == "3");
    CHECK(brute_force_mis(sim, 0.8) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("dissimilar passages are all kept") {
    std::vector<Passage> ps{passage("a", {{1, 0, 0}}), passage("b", {{0, 1, 0}}), passage("c", {{0, 0, 1}})};
    CHECK(deduplicate(ps, 0.8).size() == 3);
    ps[1].embedding.reset();
    CHECK_THROWS_AS(deduplicate(ps, 0.8), ContractViolation);
}

TEST_CASE("property: greedy dedup is feasible and maximal") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        const std::size_t dim = 2 + rng() % 4;
        std::vector<Embedding> embs;
        for (std::size_t i = 0; i < n; ++i) {
            embs.push_back(Embedding::normalized(random_unit(rng, dim)));
        }
        const double threshold = 0.5 + 0.45 * (rng() % 100) / 100.0;
        const auto kept = greedy_independent_set(embs, threshold);
        REQUIRE_FALSE(kept.empty());
        CHECK(kept.front() == 0);
        CHECK(std::is_sorted(kept.begin(), kept.end()));
        for (std::size_t a = 0; a < kept.size(); ++a) {
            for (std::size_t b = a + 1; b < kept.size(); ++b) {
                CHECK(cosine_similarity(embs[kept[a]], embs[kept[b]]) < threshold);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(kept.begin(), kept.end(), i) != kept.end()) {
                continue;
            }
            const bool blocked = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
                return cosine_similarity(embs[i], embs[k]) >= threshold;
            });
            CHECK(blocked);
        }
    }
}

TEST_CASE("selection keeps ceil(0.7 n)") {
    const PipelineConfig cfg;
    const KeywordSet ks{{"tax"}, 0};
    std::vector<Passage> ten;
    for (int i = 0; i < 10; ++i) {
        ten.push_back(passage("passage " + std::to_string(i)));
    }
    CHECK(select_passages(ten, ks, cfg).size() == 7);
    CHECK(select_passages({passage("only")}, ks, cfg).size() == 1);
    std::vector<Passage> three(3, passage("x"));
    CHECK(select_passages(three, ks, cfg).size() == 3);
}

TEST_CASE("keyword frequency example scores the tax passage highest") {
    const std::vector<Passage> ps{passage("tax rules and tax rates"), passage("red green blue and white"),
                                  passage("one two three four five")};
    const KeywordSet ks{{"tax"}, 0};
    const auto s = selection_scores(ps, ks, 0.5);
    // By hand: N = 3, df = 1, idf = ln(4/2); KF = 2/5; both normalize to 1 for passage 1, 0 elsewhere.
    CHECK(s[0].keyword_frequency == doctest::Approx(0.4));
    CHECK(s[0].tfidf == doctest::Approx(2 * std::log(2.0)));
    CHECK(s[0].score == doctest::Approx(1.0));
    CHECK(s[1].score == 0.0);
    CHECK(s[2].score == 0.0);
    const auto sel = select_passages(ps, ks, PipelineConfig{});
    CHECK(sel[0].text == ps[0].text);
    CHECK(sel[0].selection_score == doctest::Approx(1.0));
}

TEST_CASE("selection ties keep input order") {
    const std::vector<Passage> ps{passage("a b"), passage("c d"), passage("e f"), passage("g h")};
    const auto sel = select_passages(ps, KeywordSet{{"zzz"}, 0}, PipelineConfig{});
    REQUIRE(sel.size() == 3);
    CHECK(sel[0].text == "a b");
    CHECK(sel[2].text == "e f");
}

TEST_CASE("multi-word and CJK keywords") {
    const std::vector<Passage> ps{passage("news from last week in town"), passage("week last from"),
                                  passage("上海天气很好"), passage("北京")};
    const auto s = selection_scores(ps, KeywordSet{{"last week", "上海"}, 0}, 0.5);
    CHECK(s[0].keyword_frequency > 0.0);
    CHECK(s[1].keyword_frequency == 0.0);
    CHECK(s[2].keyword_frequency > 0.0);
    CHECK(s[3].score == 0.0);
}

TEST_CASE("property: an extra keyword occurrence never lowers rank") {
    std::mt19937 rng(5);
    const std::vector<std::string> words{"tax", "rate", "city", "the", "budget", "plan", "vote", "levy", "year"};
    const KeywordSet ks{{"tax", "budget"}, 0};
    const auto rank_of = [](const std::vector<SelectionScore>& s, std::size_t p) {
        std::size_t r = 0;
        for (std::size_t q = 0; q < s.size(); ++q) {
            if (q != p && (s[q].score > s[p].score + 1e-12 || (q < p && std::abs(s[q].score - s[p].score) <= 1e-12))) {
                ++r;
            }
        }
        return r;
    };
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Passage> ps;
        const std::size_t n = 2 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            std::string t;
            const std::size_t len = 3 + rng() % 10;
            for (std::size_t w = 0; w < len; ++w) {
                t += words[rng() % words.size()] + " ";
            }
            ps.push_back(passage(t));
        }
        const std::size_t p = rng() % n;
        const double alpha = (rng() % 11) / 10.0;
        const auto before = rank_of(selection_scores(ps, ks, alpha), p);
        ps[p].text += rng() % 2 == 0 ? " tax" : " budget";
        const auto after = rank_of(selection_scores(ps, ks, alpha), p);
        CHECK(after <= before);
    }
}

TEST_CASE("keyword extraction from fixture and fallback") {
    testing::TempDir dir;
    auto gw = stub(dir.path());
    dir.write(gateway::fixture_relpath(prompts::kKeywordExtraction, "Shanghai weather last week"),
              R"(["Shanghai", "weather", "2025-01-27 to 2025-02-02"])");
    const auto ks = extract_keywords("Shanghai weather last week", 3, gw);
    CHECK(ks.keywords == std::vector<std::string>{"shanghai", "weather", "2025-01-27 to 2025-02-02"});
    CHECK(ks.source_subquery == 3);

    dir.write(gateway::fixture_relpath(prompts::kKeywordExtraction, "the eclipse of the sun"), "no idea");
    Diagnostics diag;
    const auto fb = extract_keywords("the eclipse of the sun", 0, gw, &diag);
    CHECK(fb.keywords == std::vector<std::string>{"eclipse", "sun"});
    CHECK(diag.size() == 1);

    const auto all_stop = extract_keywords("what is the", 0, gw);
    CHECK(all_stop.keywords == std::vector<std::string>{"what", "is", "the"});
}

TEST_CASE("rerank orders by stub jaccard") {
    auto gw = stub();
    std::vector<Passage> ps{passage("Stock markets fell sharply today."),
                            passage("The solar eclipse of 2024 crossed North America.")};
    const auto out = rerank_passages("solar eclipse 2024", ps, gw);
    REQUIRE(out.size() == 2);
    CHECK(out[0].text == ps[1].text);
    CHECK(out[0].rerank_score > out[1].rerank_score);
    CHECK(out[1].rerank_score == 0.0);
}

TEST_CASE("rerank is stable, a permutation, and degrades on failure") {
    auto gw = stub();
    std::vector<Passage> ps{passage("zz one"), passage("zz two"), passage("zz three")};
    const auto same = rerank_passages("unrelated", ps, gw);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(same[i].text == ps[i].text);
    }
    const auto single = rerank_passages("q", {passage("only")}, gw);
    CHECK(single.size() == 1);

    std::vector<Passage> scored = ps;
    scored[0].selection_score = 0.2;
    scored[1].selection_score = 0.9;
    gw.set_fault_hook([](gateway::CallKind k, const gateway::ChatRequest*) {
        if (k == gateway::CallKind::Rerank) {
            throw ProviderError("rerank down");
        }
    });
    Diagnostics diag;
    const auto degraded = rerank_passages("zz", scored, gw, &diag);
    CHECK(degraded[0].text == "zz one");
    CHECK(degraded[1].rerank_score == 0.9);
    CHECK(diag.size() == 1);
}

TEST_CASE("rank_context pipeline invariants") {
    auto gw = stub();
    std::vector<Passage> ps;
    for (int i = 0; i < 10; ++i) {
        ps.push_back(passage("The 2024 solar eclipse passage number " + std::to_string(i) + " about totality."));
    }
    ps.push_back(ps[0]);
    ps.push_back(passage("Completely different text on gardening and tomatoes."));
    PipelineConfig cfg;
    const auto ctx = rank_context("solar eclipse 2024", 0, ps, gw, cfg);
    CHECK(ctx.passages.size() <= static_cast<std::size_t>(std::ceil(cfg.selection_ratio * 11)));
    for (std::size_t a = 0; a < ctx.passages.size(); ++a) {
        if (a + 1 < ctx.passages.size()) {
            CHECK(ctx.passages[a].rerank_score >= ctx.passages[a + 1].rerank_score);
        }
        for (std::size_t b = a + 1; b < ctx.passages.size(); ++b) {
            CHECK(cosine_similarity(*ctx.passages[a].embedding, *ctx.passages[b].embedding) < cfg.dedup_threshold);
        }
    }
    const auto j = nlohmann::json(ctx);
    CHECK(j["passages"].size() == ctx.passages.size());
}
