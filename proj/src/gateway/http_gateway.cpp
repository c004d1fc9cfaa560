#include "qsearch/gateway/http_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <httplib.h>

#include "qsearch/core/config.hpp"
#include "qsearch/core/utf8.hpp"

namespace qsearch::gateway {

using nlohmann::json;

void to_json(json& j, const ProviderSpec& p) {
    j = json{{"base_url", p.base_url},
             {"model", p.model},
             {"api_key_env", p.api_key_env},
             {"timeout_ms", p.timeout.count()},
             {"score_transform", p.score_transform}};
}

void from_json(const json& j, ProviderSpec& p) {
    p.base_url = j.at("base_url").get<std::string>();
    p.model = j.value("model", "");
    p.api_key_env = j.value("api_key_env", "");
    p.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    p.score_transform = j.value("score_transform", "none");
}

HttpGatewayConfig http_gateway_config_from_json(const json& providers) {
    HttpGatewayConfig cfg;
    try {
        cfg.chat = providers.at("chat").get<ProviderSpec>();
        cfg.embedding = providers.at("embedding").get<ProviderSpec>();
        cfg.rerank = providers.at("rerank").get<ProviderSpec>();
        if (providers.contains("crossmodal") && !providers["crossmodal"].is_null()) {
            cfg.crossmodal = providers["crossmodal"].get<ProviderSpec>();
        }
        cfg.embed_batch = providers.value("embed_batch", std::size_t{64});
        cfg.gateway.max_inflight = providers.value("max_inflight", 8);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("providers: ") + e.what());
    }
    for (const auto* spec : {&cfg.chat, &cfg.embedding, &cfg.rerank}) {
        if (spec->base_url.rfind("http://", 0) != 0 && spec->base_url.rfind("https://", 0) != 0) {
            throw ConfigError("providers: base_url must start with http:// or https://");
        }
    }
    return cfg;
}

namespace {

struct Endpoint {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path without trailing slash
};

Endpoint split_url(const std::string& base) {
    const auto scheme = base.find("://");
    const auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    Endpoint e;
    if (slash == std::string::npos) {
        e.origin = base;
    } else {
        e.origin = base.substr(0, slash);
        e.prefix = base.substr(slash);
    }
    while (!e.prefix.empty() && e.prefix.back() == '/') {
        e.prefix.pop_back();
    }
    return e;
}

httplib::Headers auth_headers(const ProviderSpec& spec) {
    httplib::Headers h;
    if (!spec.api_key_env.empty()) {
        if (const char* key = std::getenv(spec.api_key_env.c_str()); key != nullptr && *key != '\0') {
            h.emplace("Authorization", std::string("Bearer ") + key);
        }
    }
    return h;
}

[[noreturn]] void raise_for_status(int status, const std::string& body, std::string_view what) {
    std::string msg = std::string(what) + " returned HTTP " + std::to_string(status);
    if (!body.empty()) {
        msg += ": " + body.substr(0, 300);
    }
    if (status >= 500 || status == 429 || status == 408) {
        throw TransportError(msg);
    }
    if (status == 413) {
        throw BatchTooLarge(msg);
    }
    throw ProviderError(msg);
}

json post_json(const ProviderSpec& spec, std::string_view path, const json& body, std::string_view what) {
    const Endpoint ep = split_url(spec.base_url);
    httplib::Client cli(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);
    cli.set_write_timeout(secs);
    auto res = cli.Post(ep.prefix + std::string(path), auth_headers(spec), body.dump(), "application/json");
    if (!res) {
        throw TransportError(std::string(what) + " request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        raise_for_status(res->status, res->body, what);
    }
    try {
        return json::parse(res->body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string(what) + " returned malformed JSON: " + e.what());
    }
}

std::vector<std::vector<double>> parse_embeddings(const json& body, std::size_t expected, std::string_view what) {
    try {
        const auto& data = body.at("data");
        std::vector<std::vector<double>> out(expected);
        std::size_t seen = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::size_t idx = data[i].value("index", i);
            if (idx >= expected || !out[idx].empty()) {
                throw ProviderError(std::string(what) + " returned an out-of-range index");
            }
            out[idx] = data[i].at("embedding").get<std::vector<double>>();
            ++seen;
        }
        if (seen != expected) {
            throw ProviderError(std::string(what) + " returned " + std::to_string(seen) + " embeddings for " +
                                std::to_string(expected) + " inputs");
        }
        return out;
    } catch (const json::exception& e) {
        throw ProviderError(std::string(what) + " response has unexpected shape: " + e.what());
    }
}

} // namespace

std::vector<std::string> ChatStreamParser::feed(std::string_view bytes) {
    buffer_.append(bytes);
    std::vector<std::string> deltas;
    std::size_t pos = 0;
    for (;;) {
        const auto eol = buffer_.find('\n', pos);
        if (eol == std::string::npos) {
            break;
        }
        std::string_view line(buffer_.data() + pos, eol - pos);
        pos = eol + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.rfind("data:", 0) != 0) {
            continue;
        }
        line.remove_prefix(5);
        while (!line.empty() && line.front() == ' ') {
            line.remove_prefix(1);
        }
        if (line == "[DONE]") {
            finished_ = true;
            continue;
        }
        json chunk;
        try {
            chunk = json::parse(line);
        } catch (const json::exception& e) {
            throw ProviderError(std::string("malformed stream chunk: ") + e.what());
        }
        if (chunk.contains("error")) {
            throw ProviderError("provider error in stream: " + chunk["error"].dump());
        }
        if (!chunk.contains("choices") || chunk["choices"].empty()) {
            continue;
        }
        const auto& choice = chunk["choices"][0];
        if (choice.contains("delta") && choice["delta"].contains("content") &&
            choice["delta"]["content"].is_string()) {
            auto text = choice["delta"]["content"].get<std::string>();
            if (!text.empty()) {
                deltas.push_back(std::move(text));
            }
        }
        if (choice.contains("finish_reason") && choice["finish_reason"].is_string()) {
            finish_reason_ = choice["finish_reason"].get<std::string>();
        }
    }
    buffer_.erase(0, pos);
    return deltas;
}

HttpGateway::HttpGateway(HttpGatewayConfig config) : Gateway(config.gateway), config_(std::move(config)) {}

std::string HttpGateway::do_chat(const ChatRequest& request, const GenerationParams& params,
                                 const DeltaSink& on_delta) {
    const ProviderSpec& spec = config_.chat;
    json body{{"model", spec.model},
              {"stream", true},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})}};
    if (!params.stop.empty()) {
        body["stop"] = params.stop;
    }

    const Endpoint ep = split_url(spec.base_url);
    httplib::Client cli(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
    cli.set_connection_timeout(secs);
    cli.set_read_timeout(secs);

    httplib::Request req;
    req.method = "POST";
    req.path = ep.prefix + "/chat/completions";
    req.headers = auth_headers(spec);
    req.headers.emplace("Accept", "text/event-stream");
    req.set_header("Content-Type", "application/json");
    req.body = body.dump();

    int status = 0;
    std::string error_body;
    std::string full;
    ChatStreamParser parser;
    req.response_handler = [&](const httplib::Response& r) {
        status = r.status;
        return true;
    };
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
        if (status != 200) {
            error_body.append(data, len);
            return true;
        }
        for (auto& d : parser.feed(std::string_view(data, len))) {
            full += d;
            if (on_delta) {
                on_delta(d);
            }
        }
        return true;
    };
    auto res = cli.send(req);
    if (!res) {
        throw TransportError("chat request failed: " + httplib::to_string(res.error()));
    }
    if (status != 200) {
        raise_for_status(status, error_body, "chat provider");
    }
    if (parser.finish_reason() == "content_filter") {
        throw ProviderError("chat provider blocked the response (content_filter)");
    }
    return full;
}

std::vector<std::vector<double>> HttpGateway::do_embed(const std::vector<std::string>& texts) {
    const json body{{"model", config_.embedding.model}, {"input", texts}};
    return parse_embeddings(post_json(config_.embedding, "/embeddings", body, "embedding provider"), texts.size(),
                            "embedding provider");
}

std::vector<double> HttpGateway::do_rerank(std::string_view query, const std::vector<std::string>& passages) {
    const json body{{"model", config_.rerank.model},
                    {"query", query},
                    {"documents", passages},
                    {"top_n", passages.size()}};
    const json res = post_json(config_.rerank, "/rerank", body, "rerank provider");
    std::vector<double> scores(passages.size(), 0.0);
    try {
        for (const auto& r : res.at("results")) {
            const std::size_t idx = r.at("index").get<std::size_t>();
            if (idx >= scores.size()) {
                throw ProviderError("rerank provider returned an out-of-range index");
            }
            double s = r.at("relevance_score").get<double>();
            if (config_.rerank.score_transform == "sigmoid") {
                s = 1.0 / (1.0 + std::exp(-s));
            }
            scores[idx] = s;
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("rerank provider response has unexpected shape: ") + e.what());
    }
    return scores;
}

std::vector<double> HttpGateway::do_crossmodal(std::string_view text, std::span<const ImageAsset> images) {
    if (!config_.crossmodal) {
        throw CapabilityUnavailable("no cross-modal provider configured");
    }
    json input = json::array();
    input.push_back(json{{"text", text}});
    for (const auto& img : images) {
        input.push_back(json{{"image", img.url}});
    }
    const json body{{"model", config_.crossmodal->model}, {"input", input}};
    const auto vecs = parse_embeddings(post_json(*config_.crossmodal, "/embeddings", body, "cross-modal provider"),
                                       input.size(), "cross-modal provider");
    const auto q = Embedding::normalized(vecs.front());
    std::vector<double> out;
    out.reserve(images.size());
    for (std::size_t i = 1; i < vecs.size(); ++i) {
        out.push_back(cosine_similarity(q, Embedding::normalized(vecs[i])));
    }
    return out;
}

} // namespace qsearch::gateway
