#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsearch/app/cache.hpp"
#include "qsearch/app/pipeline.hpp"
#include "qsearch/core/config.hpp"
#include "qsearch/gateway/gateway.hpp"
#include "qsearch/retrieval/sources.hpp"

namespace qsearch::app {

struct RuntimeOptions {
    std::optional<std::filesystem::path> config_file;
    bool stub = false;
    // Stub replies live under <fixtures>/<template>/, file sources under
    // <fixtures>/sources/<id>/.
    std::optional<std::filesystem::path> fixtures;
    std::vector<std::string> source_ids; // empty: all
    bool cache_enabled = true;
    std::optional<std::filesystem::path> cache_file;
    EnvLookup env = process_env();
};

// Gateway, sources, cache and settings shared by the CLI verbs and the server.
struct Runtime {
    PipelineConfig config;
    nlohmann::json config_json = nlohmann::json::object();
    std::unique_ptr<gateway::Gateway> gateway;
    std::vector<retrieval::SourcePtr> sources;
    std::unique_ptr<DocumentCache> cache;
    gateway::GenerationParams generation;

    PipelineDeps deps() const;
};

// Throws ConfigError when the config cannot be read, --stub has no fixture
// directory, no providers or sources are configured, or a source id is unknown.
Runtime make_runtime(const RuntimeOptions& options, bool need_sources = true);

// $XDG_CACHE_HOME/qsearch/documents.json, else ~/.cache/qsearch/documents.json.
std::filesystem::path default_cache_file();

} // namespace qsearch::app
