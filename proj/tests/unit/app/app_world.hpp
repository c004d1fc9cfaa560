#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "qsearch/app/pipeline.hpp"
#include "qsearch/gateway/stub_gateway.hpp"
#include "qsearch/retrieval/sources.hpp"
#include "test_support.hpp"

namespace qsearch::testing {

// A small offline corpus: three pages about a river clean-up, served from a
// file search source, and a stub gateway with canned fallbacks.
struct AppWorld {
    TempDir dir;
    std::shared_ptr<retrieval::FileSearchSource> source;
    std::unique_ptr<gateway::StubGateway> gateway;

    explicit AppWorld(bool with_hits = true) {
        using nlohmann::json;
        const json pages = json::array({
            json{{"url", "https://news.example/river-cleanup"},
                 {"title", "Volunteers clear the Lune river"},
                 {"snippet", "Volunteers removed two tonnes of waste from the Lune river."},
                 {"body", "<html><head><title>Volunteers clear the Lune river</title>"
                          "<meta property=\"article:published_time\" content=\"2024-03-02\"></head><body>"
                          "<p>On 2024-03-02 more than 300 volunteers removed two tonnes of waste from the Lune river "
                          "near Lancaster.</p>"
                          "<p>The clean-up was organised by the Lune Rivers Trust and took six hours.</p>"
                          "<img src=\"/img/volunteers.jpg\" width=\"800\" height=\"600\" "
                          "alt=\"Volunteers clear the Lune river bank\"></body></html>"}},
            json{{"url", "https://council.example/lune-report"},
                 {"title", "Council report on Lune water quality"},
                 {"snippet", "Water quality in the Lune improved after the clean-up."},
                 {"body", "<html><head><title>Council report on Lune water quality</title></head><body>"
                          "<p>A council report published 2024-06-10 found that water quality in the Lune river "
                          "improved after the volunteer clean-up.</p>"
                          "<p>Phosphate levels fell by twelve percent over three months.</p>"
                          "<img src=\"/img/logo.png\" width=\"64\" height=\"64\" alt=\"council logo\">"
                          "</body></html>"}},
            json{{"url", "https://blog.example/lune-fish"},
                 {"title", "Salmon return to the Lune"},
                 {"snippet", "Anglers report salmon returning to the Lune river."},
                 {"body", ""}},
        });
        json hits = json::object();
        json list = json::array();
        for (const auto& p : pages) {
            list.push_back({{"url", p["url"]}, {"title", p["title"]}, {"snippet", p["snippet"]}});
            if (!p["body"].get<std::string>().empty()) {
                dir.write("source/" + retrieval::page_relpath(p["url"]), p["body"].get<std::string>());
            }
        }
        if (with_hits) hits["*"] = list;
        dir.write("source/hits.json", hits.dump());
        source = std::make_shared<retrieval::FileSearchSource>("web", dir.path() / "source");

        gateway::StubOptions opts;
        opts.fixture_dir = dir.path() / "gateway";
        opts.gateway = gateway::GatewayOptions{8, 0, std::chrono::milliseconds(0)};
        gateway = std::make_unique<gateway::StubGateway>(opts);
    }

    // Writes a canned model reply for (template, key).
    void reply(std::string_view template_id, std::string_view key, const std::string& text) const {
        dir.write("gateway/" + gateway::fixture_relpath(template_id, key), text);
    }

    app::PipelineDeps deps(app::DocumentCache* cache = nullptr) const {
        app::PipelineDeps d;
        d.gateway = gateway.get();
        d.sources = {source};
        d.cache = cache;
        d.generation = gateway::judge_params();
        return d;
    }

    static app::SearchInput input(std::string query) {
        app::SearchInput in;
        in.query = std::move(query);
        in.context = *preproc::UserContext::at("2025-02-05T10:00:00+08:00", std::string("Lancaster"));
        return in;
    }
};

struct RecordedEvent {
    std::string name;
    nlohmann::json data;
};

inline app::EventSink recorder(std::vector<RecordedEvent>& out) {
    return [&out](std::string_view name, const nlohmann::json& data) { out.push_back({std::string(name), data}); };
}

} // namespace qsearch::testing
