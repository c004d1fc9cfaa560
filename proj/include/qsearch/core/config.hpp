#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qsearch {

// Every tunable constant of the pipeline. Field names double as config-file
// keys and, upper-cased, as environment override names.
struct PipelineConfig {
    double dedup_threshold = 0.8;
    double timeline_merge_threshold = 0.9;
    double citation_fallback_threshold = 0.6;
    double image_relevance_threshold = 0.3;
    int chunk_size = 350;
    double chunk_overlap_ratio = 0.25;
    double selection_ratio = 0.7;
    double selection_alpha = 0.5;
    std::array<double, 3> image_weights{0.4, 0.3, 0.3};
    int max_subqueries = 6;
    int qdg_max_retries = 3;
    int expansion_count = 4;
    std::chrono::milliseconds per_source_timeout{8000};
    int max_inflight_model_calls = 8;

    // Project defaults.
    double placement_floor = 0.25;
    int image_min_side = 200;
    double image_min_aspect = 1.0 / 3.0;
    double image_max_aspect = 3.0;
    int search_page_size = 10;
    std::chrono::seconds cache_ttl{900};

    // floor(chunk_size * chunk_overlap_ratio)
    int chunk_overlap() const;
};

// Returns every violated invariant ("<field>: <reason>"); empty means valid.
std::vector<std::string> validate_config(const PipelineConfig& cfg);

void to_json(nlohmann::json& j, const PipelineConfig& cfg);
// Missing keys keep their defaults. Throws ConfigError on a type mismatch.
void from_json(const nlohmann::json& j, PipelineConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Environment lookup backed by std::getenv.
EnvLookup process_env();

// Applies overrides named after upper-cased field names, e.g. DEDUP_THRESHOLD=0.85,
// IMAGE_WEIGHTS=0.5,0.25,0.25. Throws ConfigError on unparsable values.
void apply_env_overrides(PipelineConfig& cfg, const EnvLookup& env);

// Loads a JSON config (top-level keys mirror PipelineConfig), applies env
// overrides, validates. Throws ConfigError listing all violations.
PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env);

} // namespace qsearch
