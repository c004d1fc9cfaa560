#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "qsearch/app/pipeline.hpp"

namespace httplib {
class Server;
}

namespace qsearch::app {

// One server-sent event frame: "id: n\nevent: name\ndata: <json>\n\n".
std::string format_sse(std::uint64_t id, std::string_view event, const nlohmann::json& data);

struct SseFrame {
    std::optional<std::uint64_t> id;
    std::string event;
    nlohmann::json data;
};

// Splits an event stream into frames; incomplete trailing frames are ignored.
std::vector<SseFrame> parse_sse(std::string_view stream);

// Recent session transcripts by id, optionally mirrored to `<dir>/<id>.json`.
class SessionStore {
public:
    explicit SessionStore(std::optional<std::filesystem::path> dir = {}, std::size_t capacity = 256);

    void put(const std::string& id, nlohmann::json transcript);
    std::optional<nlohmann::json> get(const std::string& id) const;

private:
    std::optional<std::filesystem::path> dir_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    std::map<std::string, nlohmann::json> sessions_;
    std::deque<std::string> order_;
};

// Parses a /api/search body: {"query", "option"?, "local_time"?, "location"?}.
// Throws ContractViolation on a missing query or malformed fields.
SearchInput search_input_from_json(const nlohmann::json& body);

// HTTP endpoints:
//   POST /api/analyze        {"query"} -> intent analysis
//   POST /api/search         search body -> text/event-stream
//   GET  /api/session/<id>   -> session transcript
class SearchService {
public:
    SearchService(Pipeline& pipeline, SessionStore& store);

    void mount(httplib::Server& server);

private:
    Pipeline& pipeline_;
    SessionStore& store_;
};

} // namespace qsearch::app
