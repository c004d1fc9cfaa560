#include "qsearch/app/server.hpp"

#include <condition_variable>
#include <fstream>
#include <memory>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::app {

using json = nlohmann::json;

std::string format_sse(std::uint64_t id, std::string_view event, const json& data) {
    std::string out = "id: " + std::to_string(id) + "\nevent: ";
    out.append(event);
    out += "\ndata: ";
    out += data.dump(-1, ' ', false, json::error_handler_t::replace);
    out += "\n\n";
    return out;
}

std::vector<SseFrame> parse_sse(std::string_view stream) {
    std::vector<SseFrame> frames;
    SseFrame cur;
    std::string data;
    bool has_fields = false;
    std::size_t pos = 0;
    while (pos < stream.size()) {
        const std::size_t nl = stream.find('\n', pos);
        if (nl == std::string_view::npos) break;
        std::string_view line = stream.substr(pos, nl - pos);
        pos = nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) {
            if (has_fields) {
                cur.data = data.empty() ? json(nullptr) : json::parse(data, nullptr, false);
                frames.push_back(std::move(cur));
            }
            cur = SseFrame{};
            data.clear();
            has_fields = false;
            continue;
        }
        if (line.front() == ':') continue;
        const std::size_t colon = line.find(':');
        const std::string_view field = line.substr(0, colon);
        std::string_view value = colon == std::string_view::npos ? std::string_view{} : line.substr(colon + 1);
        if (!value.empty() && value.front() == ' ') value.remove_prefix(1);
        has_fields = true;
        if (field == "id") {
            try {
                cur.id = std::stoull(std::string(value));
            } catch (const std::exception&) {
                cur.id.reset();
            }
        } else if (field == "event") {
            cur.event = std::string(value);
        } else if (field == "data") {
            if (!data.empty()) data += '\n';
            data.append(value);
        }
    }
    return frames;
}

SessionStore::SessionStore(std::optional<std::filesystem::path> dir, std::size_t capacity)
    : dir_(std::move(dir)), capacity_(std::max<std::size_t>(capacity, 1)) {
    if (dir_) std::filesystem::create_directories(*dir_);
}

void SessionStore::put(const std::string& id, json transcript) {
    if (dir_) {
        std::ofstream out(*dir_ / (id + ".json"));
        out << transcript.dump(2);
        if (!out) spdlog::warn("could not write session {} to {}", id, dir_->string());
    }
    std::lock_guard lock(mu_);
    if (sessions_.insert_or_assign(id, std::move(transcript)).second) order_.push_back(id);
    while (order_.size() > capacity_) {
        sessions_.erase(order_.front());
        order_.pop_front();
    }
}

std::optional<json> SessionStore::get(const std::string& id) const {
    {
        std::lock_guard lock(mu_);
        if (const auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    }
    if (dir_) {
        std::ifstream in(*dir_ / (id + ".json"));
        if (in) {
            json j = json::parse(in, nullptr, false);
            if (!j.is_discarded()) return j;
        }
    }
    return std::nullopt;
}

SearchInput search_input_from_json(const json& body) {
    if (!body.is_object()) throw ContractViolation("request body must be a JSON object");
    const auto q = body.find("query");
    if (q == body.end() || !q->is_string() || utf8::trim(q->get<std::string>()).empty()) {
        throw ContractViolation("\"query\" must be a non-empty string");
    }
    SearchInput in;
    in.query = q->get<std::string>();
    std::optional<std::string> location;
    if (const auto it = body.find("location"); it != body.end() && !it->is_null()) {
        if (!it->is_string()) throw ContractViolation("\"location\" must be a string");
        location = it->get<std::string>();
    }
    if (const auto it = body.find("local_time"); it != body.end() && !it->is_null()) {
        if (!it->is_string()) throw ContractViolation("\"local_time\" must be a string");
        auto ctx = preproc::UserContext::at(it->get<std::string>(), location);
        if (!ctx) throw ContractViolation("\"local_time\" is not an ISO time");
        in.context = *ctx;
    } else {
        in.context = preproc::UserContext::now(location);
    }
    if (const auto it = body.find("option"); it != body.end() && !it->is_null()) {
        if (!it->is_string()) throw ContractViolation("\"option\" must be a string");
        in.chosen_option = it->get<std::string>();
    }
    return in;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view message) {
    send_json(res, status, json{{"error", message}});
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
        send_error(res, 400, "request body is not valid JSON");
        return std::nullopt;
    }
    return body;
}

// Frames produced by the pipeline thread and drained by the HTTP writer.
struct EventQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> frames;
    bool closed = false;
    std::uint64_t next_id = 1;
    std::thread worker;

    void push(std::string_view event, const json& data) {
        {
            std::lock_guard lock(mu);
            frames.push_back(format_sse(next_id++, event, data));
        }
        cv.notify_all();
    }
    void close() {
        {
            std::lock_guard lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

} // namespace

SearchService::SearchService(Pipeline& pipeline, SessionStore& store) : pipeline_(pipeline), store_(store) {}

void SearchService::mount(httplib::Server& server) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    server.Post("/api/analyze", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        try {
            const SearchInput in = search_input_from_json(*body);
            send_json(res, 200, preproc::to_wire(pipeline_.analyze(in.query)));
        } catch (const ContractViolation& e) {
            send_error(res, 400, e.what());
        } catch (const Error& e) {
            send_error(res, 502, e.what());
        }
    });

    server.Post("/api/search", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, res);
        if (!body) return;
        SearchInput in;
        try {
            in = search_input_from_json(*body);
        } catch (const ContractViolation& e) {
            send_error(res, 400, e.what());
            return;
        }
        auto queue = std::make_shared<EventQueue>();
        queue->worker = std::thread([this, queue, in = std::move(in)] {
            // Terminal events are held back until the transcript is stored, so
            // a client reacting to them can fetch the session.
            std::optional<std::pair<std::string, json>> terminal;
            try {
                const SearchSession session =
                    pipeline_.run(in, [&](std::string_view event, const json& data) {
                        if (event == event::kDone || event == event::kError) {
                            terminal.emplace(std::string(event), data);
                        } else {
                            queue->push(event, data);
                        }
                    });
                store_.put(session.session_id, json(session));
            } catch (const std::exception& e) {
                spdlog::error("search failed: {}", e.what());
                terminal.emplace(std::string(event::kError),
                                 json{{"code", error_code::kInternal}, {"message", e.what()}});
            }
            if (terminal) queue->push(terminal->first, terminal->second);
            queue->close();
        });
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream",
            [queue](std::size_t, httplib::DataSink& sink) {
                std::unique_lock lock(queue->mu);
                queue->cv.wait(lock, [&] { return !queue->frames.empty() || queue->closed; });
                while (!queue->frames.empty()) {
                    const std::string frame = std::move(queue->frames.front());
                    queue->frames.pop_front();
                    if (!sink.write(frame.data(), frame.size())) return false;
                }
                if (queue->closed) sink.done();
                return true;
            },
            [queue](bool) {
                if (queue->worker.joinable()) queue->worker.join();
            });
    });

    server.Get(R"(/api/session/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = store_.get(req.matches[1].str());
        if (!session) {
            send_error(res, 404, "unknown session");
            return;
        }
        send_json(res, 200, *session);
    });
}

} // namespace qsearch::app
