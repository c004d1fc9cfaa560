#include "qsearch/app/cache.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

namespace qsearch::app {

using nlohmann::json;

namespace {

std::int64_t system_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json image_to_json(const ImageAsset& img) {
    return json{{"url", img.url},
                {"width", img.width},
                {"height", img.height},
                {"alt_text", img.alt_text},
                {"caption", img.caption ? json(*img.caption) : json(nullptr)},
                {"parent_doc", img.parent_doc}};
}

ImageAsset image_from_json(const json& j) {
    ImageAsset img;
    img.url = j.at("url").get<std::string>();
    img.width = j.value("width", 0);
    img.height = j.value("height", 0);
    img.alt_text = j.value("alt_text", "");
    if (j.contains("caption") && j["caption"].is_string()) {
        img.caption = j["caption"].get<std::string>();
    }
    img.parent_doc = j.value("parent_doc", 0);
    return img;
}

} // namespace

json document_to_json(const RetrievedDocument& doc, bool with_text) {
    json images = json::array();
    for (const auto& img : doc.images) {
        images.push_back(image_to_json(img));
    }
    json j{{"doc_index", doc.doc_index},
           {"url", doc.url},
           {"title", doc.title},
           {"report_time", doc.report_time ? json(doc.report_time->iso()) : json(nullptr)},
           {"source_id", doc.source_id},
           {"rank_in_source", doc.rank_in_source},
           {"images", images}};
    if (with_text) {
        j["clean_text"] = doc.clean_text;
    }
    return j;
}

RetrievedDocument document_from_json(const json& j) {
    RetrievedDocument doc;
    doc.doc_index = j.value("doc_index", 0);
    doc.url = j.at("url").get<std::string>();
    doc.title = j.value("title", "");
    if (j.contains("report_time") && j["report_time"].is_string()) {
        doc.report_time = Timestamp::parse(j["report_time"].get<std::string>());
    }
    doc.clean_text = j.value("clean_text", "");
    doc.source_id = j.value("source_id", "");
    doc.rank_in_source = j.value("rank_in_source", 0);
    for (const auto& img : j.value("images", json::array())) {
        doc.images.push_back(image_from_json(img));
    }
    return doc;
}

DocumentCache::DocumentCache(std::optional<std::filesystem::path> file, std::chrono::seconds ttl, bool enabled,
                             Clock clock)
    : file_(std::move(file)), ttl_(ttl), enabled_(enabled), clock_(clock ? std::move(clock) : system_seconds) {
    if (enabled_ && file_) {
        load();
    }
}

std::optional<CacheEntry> DocumentCache::lookup(const std::string& url) {
    std::lock_guard lock(mu_);
    if (!enabled_) {
        return std::nullopt;
    }
    const auto it = entries_.find(url);
    if (it == entries_.end() || clock_() - it->second.fetched_at >= it->second.ttl.count()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void DocumentCache::store(const std::string& url, const RetrievedDocument& doc) {
    std::lock_guard lock(mu_);
    if (!enabled_) {
        return;
    }
    entries_[url] = CacheEntry{url, clock_(), doc, ttl_};
    save();
}

std::size_t DocumentCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::size_t DocumentCache::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

std::size_t DocumentCache::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

void DocumentCache::load() {
    std::ifstream in(*file_);
    if (!in) {
        return;
    }
    try {
        std::ostringstream ss;
        ss << in.rdbuf();
        const json j = json::parse(ss.str());
        const auto now = clock_();
        for (const auto& [url, e] : j.at("entries").items()) {
            CacheEntry entry{url, e.at("fetched_at").get<std::int64_t>(), document_from_json(e.at("document")),
                             std::chrono::seconds(e.value("ttl", ttl_.count()))};
            if (now - entry.fetched_at < entry.ttl.count()) {
                entries_.emplace(url, std::move(entry));
            }
        }
    } catch (const std::exception& e) {
        spdlog::warn("document cache {} unreadable, starting empty: {}", file_->string(), e.what());
        entries_.clear();
    }
}

void DocumentCache::save() const {
    if (!file_) {
        return;
    }
    json entries = json::object();
    for (const auto& [url, e] : entries_) {
        entries[url] = {{"fetched_at", e.fetched_at}, {"ttl", e.ttl.count()}, {"document", document_to_json(e.document)}};
    }
    const json out{{"version", 1}, {"entries", entries}};
    std::error_code ec;
    if (file_->has_parent_path()) {
        std::filesystem::create_directories(file_->parent_path(), ec);
    }
    const auto tmp = file_->string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << out.dump();
        if (!f) {
            spdlog::warn("document cache {} not writable", file_->string());
            return;
        }
    }
    std::filesystem::rename(tmp, *file_, ec);
    if (ec) {
        spdlog::warn("document cache {} not writable: {}", file_->string(), ec.message());
    }
}

} // namespace qsearch::app
