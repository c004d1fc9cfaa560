#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsearch/core/config.hpp"
#include "qsearch/core/diagnostics.hpp"
#include "qsearch/retrieval/expansion.hpp"

namespace qsearch::retrieval {

struct SearchRequest {
    std::string query;
    std::string locale = "en";
    int page_size = 10;
};

struct RawSearchHit {
    std::string url;
    std::string title;
    std::string snippet;
    std::string source_id;
    int rank_in_source = 0; // 1-based
    std::optional<std::string> raw_html;
    std::string query; // retrieval query that produced the hit
};

void to_json(nlohmann::json& j, const RawSearchHit& h);

class SearchSource {
public:
    virtual ~SearchSource() = default;
    virtual std::string id() const = 0;
    // Hits ranked 1..n. Throws on failure.
    virtual std::vector<RawSearchHit> search(const SearchRequest& request) = 0;
    // Page body, or nullopt when the page cannot be retrieved.
    virtual std::optional<std::string> fetch_page(const std::string& url) = 0;
};

using SourcePtr = std::shared_ptr<SearchSource>;

// Reads `<dir>/hits.json` ({"<query>": [{url, title, snippet, html?}], "*": [...]})
// and page bodies from `<dir>/pages/<sha256(url)>.html`. Queries match
// exactly, then case/whitespace-insensitively, then fall back to "*".
class FileSearchSource : public SearchSource {
public:
    // Throws ConfigError when the directory or hits.json is missing or invalid.
    FileSearchSource(std::string id, std::filesystem::path dir);

    std::string id() const override { return id_; }
    std::vector<RawSearchHit> search(const SearchRequest& request) override;
    std::optional<std::string> fetch_page(const std::string& url) override;

    // Test hooks: added latency per search, and a hook that may throw.
    void set_search_delay(std::chrono::milliseconds d);
    void set_search_hook(std::function<void(const SearchRequest&)> hook);

    std::size_t page_fetch_count(const std::string& url) const;
    std::size_t total_page_fetches() const;
    std::size_t search_count() const;

private:
    std::string id_;
    std::filesystem::path dir_;
    nlohmann::json hits_;
    mutable std::mutex mu_;
    std::chrono::milliseconds delay_{0};
    std::function<void(const SearchRequest&)> hook_;
    std::map<std::string, std::size_t> fetches_;
    std::size_t searches_ = 0;
};

// Relative page path inside a file source: "pages/<sha256(url)>.html".
std::string page_relpath(const std::string& url);

// Client for a JSON search API in the SearXNG style:
// GET <base>?q=<query>&format=json -> {"results": [{url, title, content}]}.
// Pages are fetched with a plain HTTP GET.
class HttpSearchSource : public SearchSource {
public:
    HttpSearchSource(std::string id, std::string base_url, std::chrono::milliseconds timeout);

    std::string id() const override { return id_; }
    std::vector<RawSearchHit> search(const SearchRequest& request) override;
    std::optional<std::string> fetch_page(const std::string& url) override;

private:
    std::string id_;
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

// Builds sources from the config "sources" array:
// [{"id": "...", "type": "file", "dir": "..."} | {"id", "type": "http", "url"}].
// Relative dirs resolve against `base_dir`. Throws ConfigError.
std::vector<SourcePtr> sources_from_json(const nlohmann::json& sources, const std::filesystem::path& base_dir,
                                         std::chrono::milliseconds timeout);

// Issues every (query, source) pair concurrently, each bounded by
// per_source_timeout. Hits are merged with URL dedup keeping the best
// rank, ordered by (rank, source order, query order). Throws RetrievalError
// when no (query, source) pair succeeded.
std::vector<RawSearchHit> fetch_multi_source(const std::vector<RetrievalQuery>& queries,
                                             const std::vector<SourcePtr>& sources, const PipelineConfig& cfg,
                                             Diagnostics* diag = nullptr);

} // namespace qsearch::retrieval
