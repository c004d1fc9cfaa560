#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "qsearch/core/types.hpp"

namespace qsearch::app {

nlohmann::json document_to_json(const RetrievedDocument& doc, bool with_text = true);
RetrievedDocument document_from_json(const nlohmann::json& j);

struct CacheEntry {
    std::string url;
    std::int64_t fetched_at = 0; // epoch seconds
    RetrievedDocument document;
    std::chrono::seconds ttl{0};
};

// Cleaned documents keyed by URL, with a TTL. Persisted as one JSON file
// when a path is given; a missing or unreadable file starts an empty cache.
class DocumentCache {
public:
    using Clock = std::function<std::int64_t()>;

    DocumentCache(std::optional<std::filesystem::path> file, std::chrono::seconds ttl, bool enabled = true,
                  Clock clock = {});

    // Expired entries are never returned.
    std::optional<CacheEntry> lookup(const std::string& url);
    void store(const std::string& url, const RetrievedDocument& doc);

    bool enabled() const noexcept { return enabled_; }
    std::size_t size() const;
    std::size_t hits() const;
    std::size_t misses() const;

private:
    void load();
    void save() const;

    std::optional<std::filesystem::path> file_;
    std::chrono::seconds ttl_;
    bool enabled_;
    Clock clock_;
    mutable std::mutex mu_;
    std::map<std::string, CacheEntry> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

} // namespace qsearch::app
