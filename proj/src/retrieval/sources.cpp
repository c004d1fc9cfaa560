#include "qsearch/retrieval/sources.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "qsearch/core/digest.hpp"
#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::retrieval {

using nlohmann::json;

void to_json(json& j, const RawSearchHit& h) {
    j = json{{"url", h.url},
             {"title", h.title},
             {"snippet", h.snippet},
             {"source_id", h.source_id},
             {"rank_in_source", h.rank_in_source},
             {"query", h.query}};
}

std::string page_relpath(const std::string& url) { return "pages/" + sha256_hex(url) + ".html"; }

namespace {

std::optional<std::string> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string query_key(std::string_view q) { return utf8::to_lower(utf8::normalize_space(q)); }

} // namespace

FileSearchSource::FileSearchSource(std::string id, std::filesystem::path dir) : id_(std::move(id)), dir_(std::move(dir)) {
    const auto text = slurp(dir_ / "hits.json");
    if (!text) {
        throw ConfigError("search source '" + id_ + "': cannot read " + (dir_ / "hits.json").string());
    }
    try {
        hits_ = json::parse(*text);
    } catch (const json::exception& e) {
        throw ConfigError("search source '" + id_ + "': invalid hits.json: " + e.what());
    }
    if (!hits_.is_object()) {
        throw ConfigError("search source '" + id_ + "': hits.json must be an object");
    }
}

void FileSearchSource::set_search_delay(std::chrono::milliseconds d) {
    std::lock_guard lock(mu_);
    delay_ = d;
}

void FileSearchSource::set_search_hook(std::function<void(const SearchRequest&)> hook) {
    std::lock_guard lock(mu_);
    hook_ = std::move(hook);
}

std::vector<RawSearchHit> FileSearchSource::search(const SearchRequest& request) {
    std::chrono::milliseconds delay{0};
    std::function<void(const SearchRequest&)> hook;
    {
        std::lock_guard lock(mu_);
        ++searches_;
        delay = delay_;
        hook = hook_;
    }
    if (hook) {
        hook(request);
    }
    if (delay.count() > 0) {
        std::this_thread::sleep_for(delay);
    }
    const json* list = nullptr;
    if (hits_.contains(request.query)) {
        list = &hits_[request.query];
    } else {
        const auto key = query_key(request.query);
        for (auto it = hits_.begin(); it != hits_.end(); ++it) {
            if (it.key() != "*" && query_key(it.key()) == key) {
                list = &it.value();
                break;
            }
        }
        if (list == nullptr && hits_.contains("*")) {
            list = &hits_["*"];
        }
    }
    std::vector<RawSearchHit> out;
    if (list == nullptr || !list->is_array()) {
        return out;
    }
    for (const auto& h : *list) {
        if (static_cast<int>(out.size()) >= request.page_size) {
            break;
        }
        RawSearchHit hit;
        hit.url = h.value("url", "");
        if (hit.url.empty()) {
            continue;
        }
        hit.title = h.value("title", "");
        hit.snippet = h.value("snippet", "");
        if (h.contains("html") && h["html"].is_string()) {
            hit.raw_html = h["html"].get<std::string>();
        }
        hit.source_id = id_;
        hit.rank_in_source = static_cast<int>(out.size()) + 1;
        hit.query = request.query;
        out.push_back(std::move(hit));
    }
    return out;
}

std::optional<std::string> FileSearchSource::fetch_page(const std::string& url) {
    {
        std::lock_guard lock(mu_);
        ++fetches_[url];
    }
    return slurp(dir_ / page_relpath(url));
}

std::size_t FileSearchSource::page_fetch_count(const std::string& url) const {
    std::lock_guard lock(mu_);
    const auto it = fetches_.find(url);
    return it == fetches_.end() ? 0 : it->second;
}

std::size_t FileSearchSource::total_page_fetches() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [u, c] : fetches_) {
        n += c;
    }
    return n;
}

std::size_t FileSearchSource::search_count() const {
    std::lock_guard lock(mu_);
    return searches_;
}

namespace {

struct SplitUrl {
    std::string origin;
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

httplib::Client make_client(const std::string& origin, std::chrono::milliseconds timeout) {
    httplib::Client cli(origin);
    const auto secs = std::max<std::chrono::seconds>(std::chrono::seconds(1),
                                                     std::chrono::duration_cast<std::chrono::seconds>(timeout));
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    cli.set_follow_location(true);
    return cli;
}

} // namespace

HttpSearchSource::HttpSearchSource(std::string id, std::string base_url, std::chrono::milliseconds timeout)
    : id_(std::move(id)), base_url_(std::move(base_url)), timeout_(timeout) {}

std::vector<RawSearchHit> HttpSearchSource::search(const SearchRequest& request) {
    const auto u = split_url(base_url_);
    auto cli = make_client(u.origin, timeout_);
    const httplib::Params params{{"q", request.query}, {"format", "json"}, {"language", request.locale}};
    auto res = cli.Get(u.path, params, httplib::Headers{});
    if (!res) {
        throw RetrievalError("search source '" + id_ + "' failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw RetrievalError("search source '" + id_ + "' returned HTTP " + std::to_string(res->status));
    }
    std::vector<RawSearchHit> out;
    try {
        const auto body = json::parse(res->body);
        for (const auto& r : body.at("results")) {
            if (static_cast<int>(out.size()) >= request.page_size) {
                break;
            }
            RawSearchHit hit;
            hit.url = r.value("url", "");
            if (hit.url.empty()) {
                continue;
            }
            hit.title = r.value("title", "");
            hit.snippet = r.value("content", r.value("snippet", ""));
            hit.source_id = id_;
            hit.rank_in_source = static_cast<int>(out.size()) + 1;
            hit.query = request.query;
            out.push_back(std::move(hit));
        }
    } catch (const json::exception& e) {
        throw RetrievalError("search source '" + id_ + "' returned malformed JSON: " + e.what());
    }
    return out;
}

std::optional<std::string> HttpSearchSource::fetch_page(const std::string& url) {
    if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
        return std::nullopt;
    }
    const auto u = split_url(url);
    auto cli = make_client(u.origin, timeout_);
    auto res = cli.Get(u.path);
    if (!res || res->status != 200) {
        return std::nullopt;
    }
    return res->body;
}

std::vector<SourcePtr> sources_from_json(const json& sources, const std::filesystem::path& base_dir,
                                         std::chrono::milliseconds timeout) {
    if (!sources.is_array()) {
        throw ConfigError("sources: expected an array");
    }
    std::vector<SourcePtr> out;
    for (const auto& s : sources) {
        try {
            const auto id = s.at("id").get<std::string>();
            const auto type = s.value("type", "file");
            if (type == "file") {
                std::filesystem::path dir = s.at("dir").get<std::string>();
                if (dir.is_relative()) {
                    dir = base_dir / dir;
                }
                out.push_back(std::make_shared<FileSearchSource>(id, dir));
            } else if (type == "http") {
                out.push_back(std::make_shared<HttpSearchSource>(id, s.at("url").get<std::string>(), timeout));
            } else {
                throw ConfigError("sources: unknown type '" + type + "'");
            }
        } catch (const json::exception& e) {
            throw ConfigError(std::string("sources: ") + e.what());
        }
    }
    return out;
}

std::vector<RawSearchHit> fetch_multi_source(const std::vector<RetrievalQuery>& queries,
                                             const std::vector<SourcePtr>& sources, const PipelineConfig& cfg,
                                             Diagnostics* diag) {
    if (sources.empty()) {
        throw ContractViolation("fetch_multi_source: at least one source is required");
    }
    struct Pending {
        std::size_t source;
        std::size_t query;
        std::future<std::vector<RawSearchHit>> result;
    };
    std::vector<Pending> pending;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        for (std::size_t si = 0; si < sources.size(); ++si) {
            // Detached worker with shared state, so a stuck source cannot
            // block the caller past the timeout.
            auto promise = std::make_shared<std::promise<std::vector<RawSearchHit>>>();
            auto fut = promise->get_future();
            SearchRequest req{queries[qi].text, "en", cfg.search_page_size};
            std::thread([promise, source = sources[si], req = std::move(req)]() mutable {
                try {
                    promise->set_value(source->search(req));
                } catch (...) {
                    promise->set_exception(std::current_exception());
                }
            }).detach();
            pending.push_back(Pending{si, qi, std::move(fut)});
        }
    }

    const auto deadline = std::chrono::steady_clock::now() + cfg.per_source_timeout;
    struct Ranked {
        RawSearchHit hit;
        std::size_t source;
        std::size_t query;
    };
    std::map<std::string, Ranked> best;
    std::size_t succeeded = 0;
    for (auto& p : pending) {
        const std::string& sid = sources[p.source]->id();
        const std::string& qtext = queries[p.query].text;
        if (p.result.wait_until(deadline) != std::future_status::ready) {
            warn(diag, "retrieval", "source '" + sid + "' timed out for \"" + qtext + "\"");
            continue;
        }
        std::vector<RawSearchHit> hits;
        try {
            hits = p.result.get();
        } catch (const std::exception& e) {
            warn(diag, "retrieval", "source '" + sid + "' failed for \"" + qtext + "\": " + e.what());
            continue;
        }
        ++succeeded;
        for (auto& h : hits) {
            h.source_id = sid;
            const auto key = std::make_tuple(h.rank_in_source, p.source, p.query);
            const std::string url = h.url;
            auto it = best.find(url);
            if (it == best.end()) {
                best.emplace(url, Ranked{std::move(h), p.source, p.query});
            } else if (key < std::make_tuple(it->second.hit.rank_in_source, it->second.source, it->second.query)) {
                it->second = Ranked{std::move(h), p.source, p.query};
            }
        }
    }
    if (succeeded == 0 && !pending.empty()) {
        throw RetrievalError("no search source responded");
    }
    std::vector<Ranked> merged;
    merged.reserve(best.size());
    for (auto& [url, r] : best) {
        merged.push_back(std::move(r));
    }
    std::sort(merged.begin(), merged.end(), [](const Ranked& a, const Ranked& b) {
        return std::make_tuple(a.hit.rank_in_source, a.source, a.query, a.hit.url) <
               std::make_tuple(b.hit.rank_in_source, b.source, b.query, b.hit.url);
    });
    std::vector<RawSearchHit> out;
    out.reserve(merged.size());
    for (auto& r : merged) {
        out.push_back(std::move(r.hit));
    }
    return out;
}

} // namespace qsearch::retrieval
