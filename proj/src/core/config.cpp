#include "qsearch/core/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qsearch/core/errors.hpp"

namespace qsearch {

using nlohmann::json;

int PipelineConfig::chunk_overlap() const {
    return static_cast<int>(std::floor(static_cast<double>(chunk_size) * chunk_overlap_ratio));
}

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string upper(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return static_cast<int>(i);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

} // namespace

std::vector<std::string> validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> v;
    const auto threshold = [&](const char* name, double value) {
        if (!in_unit(value)) {
            v.push_back(std::string(name) + ": threshold out of range");
        }
    };
    threshold("dedup_threshold", cfg.dedup_threshold);
    threshold("timeline_merge_threshold", cfg.timeline_merge_threshold);
    threshold("citation_fallback_threshold", cfg.citation_fallback_threshold);
    threshold("image_relevance_threshold", cfg.image_relevance_threshold);
    threshold("placement_floor", cfg.placement_floor);
    if (cfg.chunk_size < 1) {
        v.emplace_back("chunk_size: must be positive");
    }
    if (!(cfg.chunk_overlap_ratio >= 0.0 && cfg.chunk_overlap_ratio < 1.0)) {
        v.emplace_back("chunk_overlap_ratio: must be in [0, 1)");
    }
    if (!(cfg.selection_ratio > 0.0 && cfg.selection_ratio <= 1.0)) {
        v.emplace_back("selection_ratio: must be in (0, 1]");
    }
    if (!in_unit(cfg.selection_alpha)) {
        v.emplace_back("selection_alpha: must be in [0, 1]");
    }
    double sum = 0.0;
    bool negative = false;
    for (double w : cfg.image_weights) {
        sum += w;
        negative = negative || !(w >= 0.0);
    }
    if (negative) {
        v.emplace_back("image_weights: weights must be nonnegative");
    }
    if (!(std::fabs(sum - 1.0) <= 1e-9)) {
        v.emplace_back("image_weights: weights must sum to 1");
    }
    if (cfg.max_subqueries < 1) {
        v.emplace_back("max_subqueries: must be at least 1");
    }
    if (cfg.qdg_max_retries < 1) {
        v.emplace_back("qdg_max_retries: must be at least 1");
    }
    if (cfg.expansion_count < 0) {
        v.emplace_back("expansion_count: must be nonnegative");
    }
    if (cfg.per_source_timeout.count() <= 0) {
        v.emplace_back("per_source_timeout: must be positive");
    }
    if (cfg.max_inflight_model_calls < 1) {
        v.emplace_back("max_inflight_model_calls: must be at least 1");
    }
    if (cfg.image_min_side < 0) {
        v.emplace_back("image_min_side: must be nonnegative");
    }
    if (!(cfg.image_min_aspect > 0.0 && cfg.image_min_aspect <= cfg.image_max_aspect)) {
        v.emplace_back("image_min_aspect: must be positive and not above image_max_aspect");
    }
    if (cfg.search_page_size < 1) {
        v.emplace_back("search_page_size: must be at least 1");
    }
    if (cfg.cache_ttl.count() < 0) {
        v.emplace_back("cache_ttl: must be nonnegative");
    }
    return v;
}

void to_json(json& j, const PipelineConfig& cfg) {
    j = json{
        {"dedup_threshold", cfg.dedup_threshold},
        {"timeline_merge_threshold", cfg.timeline_merge_threshold},
        {"citation_fallback_threshold", cfg.citation_fallback_threshold},
        {"image_relevance_threshold", cfg.image_relevance_threshold},
        {"chunk_size", cfg.chunk_size},
        {"chunk_overlap_ratio", cfg.chunk_overlap_ratio},
        {"selection_ratio", cfg.selection_ratio},
        {"selection_alpha", cfg.selection_alpha},
        {"image_weights", cfg.image_weights},
        {"max_subqueries", cfg.max_subqueries},
        {"qdg_max_retries", cfg.qdg_max_retries},
        {"expansion_count", cfg.expansion_count},
        {"per_source_timeout", cfg.per_source_timeout.count()},
        {"max_inflight_model_calls", cfg.max_inflight_model_calls},
        {"placement_floor", cfg.placement_floor},
        {"image_min_side", cfg.image_min_side},
        {"image_min_aspect", cfg.image_min_aspect},
        {"image_max_aspect", cfg.image_max_aspect},
        {"search_page_size", cfg.search_page_size},
        {"cache_ttl", cfg.cache_ttl.count()},
    };
}

void from_json(const json& j, PipelineConfig& cfg) {
    if (!j.is_object()) {
        throw ConfigError("pipeline config must be a JSON object");
    }
    read(j, "dedup_threshold", cfg.dedup_threshold);
    read(j, "timeline_merge_threshold", cfg.timeline_merge_threshold);
    read(j, "citation_fallback_threshold", cfg.citation_fallback_threshold);
    read(j, "image_relevance_threshold", cfg.image_relevance_threshold);
    read(j, "chunk_size", cfg.chunk_size);
    read(j, "chunk_overlap_ratio", cfg.chunk_overlap_ratio);
    read(j, "selection_ratio", cfg.selection_ratio);
    read(j, "selection_alpha", cfg.selection_alpha);
    read(j, "image_weights", cfg.image_weights);
    read(j, "max_subqueries", cfg.max_subqueries);
    read(j, "qdg_max_retries", cfg.qdg_max_retries);
    read(j, "expansion_count", cfg.expansion_count);
    std::int64_t timeout_ms = cfg.per_source_timeout.count();
    read(j, "per_source_timeout", timeout_ms);
    cfg.per_source_timeout = std::chrono::milliseconds(timeout_ms);
    read(j, "max_inflight_model_calls", cfg.max_inflight_model_calls);
    read(j, "placement_floor", cfg.placement_floor);
    read(j, "image_min_side", cfg.image_min_side);
    read(j, "image_min_aspect", cfg.image_min_aspect);
    read(j, "image_max_aspect", cfg.image_max_aspect);
    read(j, "search_page_size", cfg.search_page_size);
    std::int64_t ttl = cfg.cache_ttl.count();
    read(j, "cache_ttl", ttl);
    cfg.cache_ttl = std::chrono::seconds(ttl);
}

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) {
            return std::string(v);
        }
        return std::nullopt;
    };
}

void apply_env_overrides(PipelineConfig& cfg, const EnvLookup& env) {
    const auto dbl = [&](const char* field, double& out) {
        const std::string key = upper(field);
        if (auto v = env(key)) {
            out = parse_double(key, *v);
        }
    };
    const auto integer = [&](const char* field, int& out) {
        const std::string key = upper(field);
        if (auto v = env(key)) {
            out = parse_int(key, *v);
        }
    };
    dbl("dedup_threshold", cfg.dedup_threshold);
    dbl("timeline_merge_threshold", cfg.timeline_merge_threshold);
    dbl("citation_fallback_threshold", cfg.citation_fallback_threshold);
    dbl("image_relevance_threshold", cfg.image_relevance_threshold);
    integer("chunk_size", cfg.chunk_size);
    dbl("chunk_overlap_ratio", cfg.chunk_overlap_ratio);
    dbl("selection_ratio", cfg.selection_ratio);
    dbl("selection_alpha", cfg.selection_alpha);
    if (auto v = env("IMAGE_WEIGHTS")) {
        std::stringstream ss(*v);
        std::string part;
        std::vector<double> parts;
        while (std::getline(ss, part, ',')) {
            parts.push_back(parse_double("IMAGE_WEIGHTS", part));
        }
        if (parts.size() != 3) {
            throw ConfigError("IMAGE_WEIGHTS: expected three comma-separated weights");
        }
        cfg.image_weights = {parts[0], parts[1], parts[2]};
    }
    integer("max_subqueries", cfg.max_subqueries);
    integer("qdg_max_retries", cfg.qdg_max_retries);
    integer("expansion_count", cfg.expansion_count);
    if (auto v = env("PER_SOURCE_TIMEOUT")) {
        cfg.per_source_timeout = std::chrono::milliseconds(parse_int("PER_SOURCE_TIMEOUT", *v));
    }
    integer("max_inflight_model_calls", cfg.max_inflight_model_calls);
    dbl("placement_floor", cfg.placement_floor);
    integer("image_min_side", cfg.image_min_side);
    dbl("image_min_aspect", cfg.image_min_aspect);
    dbl("image_max_aspect", cfg.image_max_aspect);
    integer("search_page_size", cfg.search_page_size);
    if (auto v = env("CACHE_TTL")) {
        cfg.cache_ttl = std::chrono::seconds(parse_int("CACHE_TTL", *v));
    }
}

PipelineConfig load_pipeline_config(const std::optional<std::filesystem::path>& path, const EnvLookup& env) {
    PipelineConfig cfg;
    if (path) {
        std::ifstream in(*path);
        if (!in) {
            throw ConfigError("cannot open config file " + path->string());
        }
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + path->string() + ": " + e.what());
        }
        from_json(j, cfg);
    }
    apply_env_overrides(cfg, env);
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) {
            msg += "\n  " + v;
        }
        throw ConfigError(msg);
    }
    return cfg;
}

} // namespace qsearch
