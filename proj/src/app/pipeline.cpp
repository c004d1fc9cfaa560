#include "qsearch/app/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>
#include <utility>

#include <spdlog/spdlog.h>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"
#include "qsearch/presentation/source_docs.hpp"
#include "qsearch/retrieval/chunker.hpp"
#include "qsearch/retrieval/html_clean.hpp"

namespace qsearch::app {

using json = nlohmann::json;

namespace {

using SteadyClock = std::chrono::steady_clock;

double ms_since(SteadyClock::time_point t0) {
    return std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
}

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 16; ++i) id += kHex[rng() % 16];
    return id;
}

std::string utc_now_iso() {
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
    return Timestamp::from_epoch_seconds(secs).iso();
}

// Runs fn(i) for i in [0, n) on up to `width` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t width, Fn&& fn) {
    if (n == 0) return;
    width = std::clamp<std::size_t>(width, 1, n);
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> threads;
    threads.reserve(width);
    for (std::size_t t = 0; t < width; ++t) {
        threads.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(mu);
                    if (next >= n) return;
                    i = next++;
                }
                fn(i);
            }
        });
    }
    for (auto& th : threads) th.join();
}

class Emitter {
public:
    explicit Emitter(const EventSink& sink) : sink_(sink) {}

    void operator()(std::string_view name, const json& data) {
        if (!sink_) return;
        std::lock_guard lock(mu_);
        try {
            sink_(name, data);
        } catch (const std::exception& e) {
            spdlog::warn("event sink failed on {}: {}", name, e.what());
        }
    }

private:
    const EventSink& sink_;
    std::mutex mu_;
};

json citation_payload(const presentation::CitationEvent& e) {
    json j = e;
    j["marker"] = e.doc_index ? json("[" + std::to_string(*e.doc_index) + "]") : json(nullptr);
    return j;
}

struct FetchedPage {
    std::optional<RetrievedDocument> doc;
};

} // namespace

Pipeline::Pipeline(PipelineDeps deps) : deps_(std::move(deps)) {
    if (deps_.gateway == nullptr) throw ConfigError("pipeline needs a model gateway");
    if (deps_.sources.empty()) throw ConfigError("pipeline needs at least one search source");
    if (const auto problems = validate_config(deps_.config); !problems.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw ConfigError(msg);
    }
}

preproc::IntentAnalysis Pipeline::analyze(std::string_view query, Diagnostics* diag) {
    if (utf8::trim(query).empty()) throw ContractViolation("empty query");
    return preproc::analyze_intent(query, *deps_.gateway, diag);
}

SearchSession Pipeline::run(const SearchInput& input, const EventSink& sink) {
    if (utf8::trim(input.query).empty()) throw ContractViolation("empty query");

    const auto wall0 = SteadyClock::now();
    gateway::Gateway& gw = *deps_.gateway;
    const PipelineConfig& cfg = deps_.config;
    Diagnostics diag;
    Emitter emit(sink);

    SearchSession s;
    s.session_id = new_session_id();
    s.created_at = utc_now_iso();
    s.query = input.query;
    s.chosen_option = input.chosen_option;
    s.user_context = input.context;
    s.config = cfg;

    auto stage = [&](std::string name, SteadyClock::time_point t0) { s.timings.push_back({std::move(name), ms_since(t0)}); };
    auto finish = [&]() -> SearchSession {
        s.warnings = diag.sorted();
        s.wall_ms = ms_since(wall0);
        return std::move(s);
    };
    auto fail = [&](std::string_view code, std::string message) -> SearchSession {
        s.status = "error";
        s.error = SessionError{std::string(code), message};
        emit(event::kError, json{{"code", code}, {"message", message}, {"session_id", s.session_id}});
        return finish();
    };

    try {
        // Intent.
        auto t0 = SteadyClock::now();
        s.intent = preproc::analyze_intent(input.query, gw, &diag);
        stage("analyze", t0);
        if (s.intent->refusal) {
            s.status = "refused";
            s.error = SessionError{std::string(error_code::kRefused), std::string(preproc::kRefusalMessage)};
            emit(event::kError, json{{"code", error_code::kRefused},
                                     {"message", preproc::kRefusalMessage},
                                     {"category", s.intent->refusal_category ? json(*s.intent->refusal_category)
                                                                             : json(nullptr)},
                                     {"session_id", s.session_id}});
            return finish();
        }
        s.effective_query = input.query;
        if (input.chosen_option && !utf8::trim(*input.chosen_option).empty()) {
            s.effective_query = preproc::apply_clarification(input.query, *input.chosen_option);
        } else if (s.intent->needs_clarification) {
            diag.warn("preproc", "clarification requested but no option chosen; searching the query as given");
        }

        // Rewrite.
        t0 = SteadyClock::now();
        try {
            s.rewritten_query = preproc::rewrite_query(s.effective_query, input.context, gw, &diag);
        } catch (const Error& e) {
            diag.warn("preproc", std::string("rewrite failed, using the query as given: ") + e.what());
            s.rewritten_query = s.effective_query;
        }
        if (utf8::trim(s.rewritten_query).empty()) s.rewritten_query = s.effective_query;
        stage("rewrite", t0);

        // Plan.
        t0 = SteadyClock::now();
        try {
            auto built = qdg::build_qdg(s.rewritten_query, gw, cfg, &diag);
            s.qdg = std::move(built.graph);
            s.qdg_attempts = built.attempts;
            s.qdg_degraded = built.degraded;
        } catch (const Error& e) {
            diag.warn("qdg", std::string("decomposition failed, answering directly: ") + e.what());
            s.qdg = qdg::Qdg::terminal(s.rewritten_query);
            s.qdg_degraded = true;
        }
        stage("plan", t0);
        emit(event::kMeta, json{{"schema_version", kEventSchemaVersion},
                                {"session_id", s.session_id},
                                {"query", s.query},
                                {"rewritten_query", s.rewritten_query},
                                {"qdg", *s.qdg},
                                {"degraded", s.qdg_degraded}});

        // Retrieve: per-node search, session-wide page fetch, per-node ranking.
        t0 = SteadyClock::now();
        const auto& nodes = s.qdg->nodes();
        s.nodes.resize(nodes.size());
        std::vector<std::vector<retrieval::RawSearchHit>> node_hits(nodes.size());
        parallel_for(nodes.size(), nodes.size(), [&](std::size_t i) {
            NodeRecord& rec = s.nodes[i];
            rec.node = nodes[i].id;
            rec.sub_query = nodes[i].sub_query;
            try {
                rec.retrieval_queries = retrieval::expand_query(rec.sub_query, rec.node, gw, cfg, &diag);
            } catch (const Error& e) {
                diag.warn("retrieval", "expansion failed for node " + std::to_string(rec.node) + ": " + e.what());
                rec.retrieval_queries = {retrieval::RetrievalQuery{rec.sub_query, rec.node,
                                                                   retrieval::Dimension::Verbatim}};
            }
            try {
                node_hits[i] = retrieval::fetch_multi_source(rec.retrieval_queries, deps_.sources, cfg, &diag);
            } catch (const Error& e) {
                diag.warn("retrieval", "no results for node " + std::to_string(rec.node) + ": " + e.what());
            }
        });

        std::vector<std::string> urls;
        std::map<std::string, retrieval::RawSearchHit> first_hit;
        for (const auto& hits : node_hits) {
            for (const auto& h : hits) {
                if (first_hit.emplace(h.url, h).second) urls.push_back(h.url);
            }
        }
        std::map<std::string, retrieval::SourcePtr> source_by_id;
        for (const auto& src : deps_.sources) source_by_id.emplace(src->id(), src);

        std::vector<FetchedPage> pages(urls.size());
        parallel_for(urls.size(), 8, [&](std::size_t i) {
            const retrieval::RawSearchHit& hit = first_hit.at(urls[i]);
            std::optional<RetrievedDocument> doc;
            if (deps_.cache != nullptr) {
                if (auto entry = deps_.cache->lookup(hit.url)) doc = std::move(entry->document);
            }
            if (!doc) {
                std::optional<std::string> html = hit.raw_html;
                if (!html) {
                    const auto it = source_by_id.find(hit.source_id);
                    if (it != source_by_id.end()) {
                        try {
                            html = it->second->fetch_page(hit.url);
                        } catch (const std::exception& e) {
                            diag.warn("retrieval", "page fetch failed for " + hit.url + ": " + e.what());
                        }
                    }
                }
                if (html) doc = retrieval::clean_document(*html, hit.url);
                if (doc && deps_.cache != nullptr) deps_.cache->store(hit.url, *doc);
            }
            if (!doc && !utf8::trim(hit.snippet).empty()) {
                diag.warn("retrieval", "using the search snippet for " + hit.url);
                RetrievedDocument d;
                d.url = hit.url;
                d.title = hit.title;
                d.clean_text = utf8::normalize_space(hit.snippet);
                doc = std::move(d);
            } else if (!doc) {
                diag.warn("retrieval", "dropped unreadable page " + hit.url);
            }
            if (doc) {
                if (utf8::trim(doc->title).empty()) doc->title = hit.title;
                doc->source_id = hit.source_id;
                doc->rank_in_source = hit.rank_in_source;
            }
            pages[i].doc = std::move(doc);
        });

        std::map<std::string, int> index_of_url;
        for (std::size_t i = 0; i < urls.size(); ++i) {
            if (!pages[i].doc) continue;
            RetrievedDocument doc = std::move(*pages[i].doc);
            doc.doc_index = static_cast<int>(s.documents.size()) + 1;
            for (auto& img : doc.images) img.parent_doc = doc.doc_index;
            index_of_url.emplace(urls[i], doc.doc_index);
            s.documents.push_back(std::move(doc));
        }
        if (s.documents.empty()) {
            stage("retrieve", t0);
            return fail(error_code::kRetrievalEmpty, "no documents could be retrieved for this query");
        }

        parallel_for(nodes.size(), nodes.size(), [&](std::size_t i) {
            NodeRecord& rec = s.nodes[i];
            std::vector<Passage> passages;
            for (const auto& h : node_hits[i]) {
                const auto it = index_of_url.find(h.url);
                if (it == index_of_url.end()) continue;
                rec.documents.push_back(it->second);
                auto chunks = retrieval::chunk_document(s.documents[static_cast<std::size_t>(it->second - 1)], cfg);
                std::move(chunks.begin(), chunks.end(), std::back_inserter(passages));
            }
            rec.context.subquery = rec.node;
            if (passages.empty()) return;
            try {
                rec.context = ranking::rank_context(rec.sub_query, rec.node, std::move(passages), gw, cfg, &diag);
            } catch (const Error& e) {
                diag.warn("ranking", "ranking failed for node " + std::to_string(rec.node) + ": " + e.what());
            }
        });
        stage("retrieve", t0);

        // Presentation work that only needs the retrieved material.
        std::vector<Passage> pooled;
        {
            std::set<std::tuple<int, std::size_t, std::size_t>> seen;
            for (const auto& rec : s.nodes) {
                for (const auto& p : rec.context.passages) {
                    if (seen.emplace(p.parent_doc, p.char_range.start, p.char_range.end).second) pooled.push_back(p);
                }
            }
        }
        std::map<int, std::optional<Timestamp>> report_times;
        std::vector<ImageAsset> all_images;
        for (const auto& d : s.documents) {
            report_times.emplace(d.doc_index, d.report_time);
            all_images.insert(all_images.end(), d.images.begin(), d.images.end());
        }
        auto timeline_job = std::async(std::launch::async, [&]() -> std::vector<presentation::TimelineGroup> {
            try {
                auto events = presentation::extract_events(pooled, report_times, gw, &diag);
                if (events.empty()) return {};
                events = presentation::merge_events(events, gw, cfg);
                return presentation::group_events(events, s.rewritten_query, gw, &diag);
            } catch (const Error& e) {
                diag.warn("timeline", std::string("timeline unavailable: ") + e.what());
                return {};
            }
        });
        auto images_job = std::async(std::launch::async, [&]() -> std::vector<ImageAsset> {
            try {
                return presentation::filter_images(all_images, s.rewritten_query, gw, cfg, &diag);
            } catch (const Error& e) {
                diag.warn("images", std::string("image filtering failed: ") + e.what());
                return {};
            }
        });
        const auto source_docs = presentation::build_source_docs(s.documents, pooled);

        // Generate node answers.
        t0 = SteadyClock::now();
        std::map<int, std::size_t> record_of;
        for (std::size_t i = 0; i < s.nodes.size(); ++i) record_of.emplace(s.nodes[i].node, i);
        auto answers = generation::answer_graph(
            *s.qdg, [&](qdg::NodeId id) { return s.nodes[record_of.at(id)].context.passages; }, gw,
            deps_.generation,
            [&](qdg::NodeId id) {
                generation::StreamCallbacks cb;
                cb.on_delta = [&emit, id](std::string_view d) {
                    emit(event::kNodeAnswer, json{{"node", id}, {"delta", d}});
                };
                return cb;
            },
            &diag);
        for (auto& [id, stream] : answers) s.nodes[record_of.at(id)].answer = stream;
        stage("generate", t0);

        // Synthesize, citing sentences as they complete.
        t0 = SteadyClock::now();
        presentation::CitationWorker worker(
            source_docs, gw, cfg, [&emit](const presentation::CitationEvent& e) { emit(event::kCitation, citation_payload(e)); },
            &diag);
        auto on_sentence = [&](const generation::Sentence& sent) {
            emit(event::kSentence,
                 json{{"index", sent.index}, {"char_range", {sent.range.start, sent.range.end}}});
            worker.push(sent);
        };
        generation::StreamCallbacks final_cb;
        final_cb.on_delta = [&emit](std::string_view d) { emit(event::kAnswer, json{{"delta", d}}); };
        final_cb.on_sentence = on_sentence;
        try {
            s.final_answer = generation::synthesize_final(*s.qdg, answers, gw, deps_.generation, final_cb, &diag);
        } catch (const PipelineError& e) {
            s.citations = worker.finish();
            stage("synthesize", t0);
            s.timeline = timeline_job.get();
            images_job.get();
            return fail(error_code::kGenerationUnavailable, e.what());
        }
        if (s.qdg->is_terminal()) {
            // The single node's stream is reused; replay it as the final answer.
            std::size_t covered = 0;
            std::size_t next_sentence = 0;
            const auto& sentences = s.final_answer->sentences;
            for (const auto& d : s.final_answer->deltas) {
                emit(event::kAnswer, json{{"delta", d}});
                covered += utf8::length(d);
                while (next_sentence < sentences.size() && sentences[next_sentence].range.end <= covered) {
                    on_sentence(sentences[next_sentence++]);
                }
            }
            while (next_sentence < sentences.size()) on_sentence(sentences[next_sentence++]);
        }
        s.citations = worker.finish();
        stage("synthesize", t0);

        // Timeline and image placement.
        t0 = SteadyClock::now();
        s.timeline = timeline_job.get();
        const auto images = images_job.get();
        const auto paragraphs = presentation::split_paragraphs(s.final_answer->text);
        if (!images.empty() && !paragraphs.empty()) {
            std::vector<std::string> texts;
            for (const auto& p : paragraphs) texts.push_back(p.text);
            try {
                const auto matrix = presentation::placement_matrix(texts, images, source_docs, gw, cfg, &diag);
                s.images = presentation::assign_images(matrix, images, cfg.placement_floor);
            } catch (const Error& e) {
                diag.warn("images", std::string("image placement failed: ") + e.what());
            }
        }
        emit(event::kTimeline, json{{"groups", s.timeline}});
        emit(event::kImages, json{{"placements", s.images}});
        stage("finalize", t0);

        std::size_t cited = 0;
        for (const auto& c : s.citations) cited += c.doc_index ? 1 : 0;
        std::size_t timeline_events = 0;
        for (const auto& g : s.timeline) timeline_events += g.events.size();
        SearchSession done = finish();
        json timings = json::object();
        for (const auto& t : done.timings) timings[t.stage] = t.ms;
        emit(event::kDone, json{{"session_id", done.session_id},
                                {"status", done.status},
                                {"stats",
                                 {{"documents", done.documents.size()},
                                  {"sentences", done.final_answer->sentences.size()},
                                  {"cited_sentences", cited},
                                  {"timeline_events", timeline_events},
                                  {"images", done.images.size()},
                                  {"warnings", done.warnings.size()},
                                  {"timings_ms", timings},
                                  {"wall_ms", done.wall_ms}}}});
        return done;
    } catch (const TransportError& e) {
        return fail(error_code::kGatewayUnavailable, e.what());
    } catch (const ProviderError& e) {
        return fail(error_code::kGatewayUnavailable, e.what());
    } catch (const Error& e) {
        return fail(error_code::kInternal, e.what());
    }
}

} // namespace qsearch::app
