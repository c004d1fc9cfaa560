#include "qsearch/app/runtime.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "qsearch/core/errors.hpp"
#include "qsearch/gateway/http_gateway.hpp"
#include "qsearch/gateway/stub_gateway.hpp"

namespace qsearch::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json read_config_json(const std::optional<fs::path>& path) {
    if (!path) return json::object();
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + path->string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ConfigError("config file " + path->string() + " is not a JSON object");
    return j;
}

std::unique_ptr<gateway::Gateway> make_gateway(const RuntimeOptions& o, const json& cfg_json, const PipelineConfig& cfg) {
    if (o.stub) {
        if (!o.fixtures) throw ConfigError("the stub gateway needs a fixture directory");
        if (!fs::is_directory(*o.fixtures)) throw ConfigError("fixture directory not found: " + o.fixtures->string());
        gateway::StubOptions stub;
        stub.fixture_dir = *o.fixtures;
        stub.gateway = gateway::GatewayOptions{cfg.max_inflight_model_calls, 0, std::chrono::milliseconds(0)};
        return std::make_unique<gateway::StubGateway>(stub);
    }
    if (!cfg_json.contains("providers")) throw ConfigError("no model providers configured");
    auto hcfg = gateway::http_gateway_config_from_json(cfg_json.at("providers"));
    hcfg.gateway.max_inflight = cfg.max_inflight_model_calls;
    return std::make_unique<gateway::HttpGateway>(hcfg);
}

std::vector<retrieval::SourcePtr> make_sources(const RuntimeOptions& o, const json& cfg_json,
                                               const PipelineConfig& cfg) {
    std::vector<retrieval::SourcePtr> all;
    if (o.fixtures && fs::is_directory(*o.fixtures / "sources")) {
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(*o.fixtures / "sources")) {
            if (e.is_directory()) dirs.push_back(e.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
            all.push_back(std::make_shared<retrieval::FileSearchSource>(d.filename().string(), d));
        }
    }
    if (all.empty() && cfg_json.contains("sources")) {
        const fs::path base = o.config_file ? o.config_file->parent_path() : fs::current_path();
        all = retrieval::sources_from_json(cfg_json.at("sources"), base, cfg.per_source_timeout);
    }
    if (!o.source_ids.empty()) {
        const std::set<std::string> wanted(o.source_ids.begin(), o.source_ids.end());
        std::vector<retrieval::SourcePtr> picked;
        for (const auto& s : all) {
            if (wanted.count(s->id())) picked.push_back(s);
        }
        if (picked.size() != wanted.size()) throw ConfigError("unknown source id in the source selection");
        all = std::move(picked);
    }
    if (all.empty()) throw ConfigError("no search sources configured");
    return all;
}

} // namespace

fs::path default_cache_file() {
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "qsearch" / "documents.json";
    if (const char* home = std::getenv("HOME"); home && *home) {
        return fs::path(home) / ".cache" / "qsearch" / "documents.json";
    }
    return ".qsearch-cache.json";
}

PipelineDeps Runtime::deps() const {
    PipelineDeps d;
    d.gateway = gateway.get();
    d.sources = sources;
    d.cache = cache.get();
    d.config = config;
    d.generation = generation;
    return d;
}

Runtime make_runtime(const RuntimeOptions& o, bool need_sources) {
    Runtime rt;
    rt.config_json = read_config_json(o.config_file);
    rt.config = load_pipeline_config(o.config_file, o.env);
    rt.gateway = make_gateway(o, rt.config_json, rt.config);
    if (need_sources) rt.sources = make_sources(o, rt.config_json, rt.config);
    if (const auto g = rt.config_json.find("generation"); g != rt.config_json.end() && g->is_object()) {
        rt.generation.temperature = g->value("temperature", rt.generation.temperature);
        rt.generation.max_tokens = g->value("max_tokens", rt.generation.max_tokens);
    }
    std::optional<fs::path> file = o.cache_file;
    if (!file) {
        if (const auto c = rt.config_json.find("cache"); c != rt.config_json.end() && c->contains("file")) {
            file = c->at("file").get<std::string>();
        }
    }
    if (!file) file = default_cache_file();
    rt.cache = std::make_unique<DocumentCache>(o.cache_enabled ? file : std::nullopt, rt.config.cache_ttl,
                                               o.cache_enabled);
    return rt;
}

} // namespace qsearch::app
