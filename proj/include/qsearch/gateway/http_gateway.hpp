#pragma once

#include <chrono>
#include <optional>
#include <string>

#include <json.hpp>

#include "qsearch/gateway/gateway.hpp"

namespace qsearch::gateway {

// One hosted model endpoint. `base_url` includes any path prefix, e.g.
// "https://api.example.com/v1"; the API key is read from `api_key_env`.
struct ProviderSpec {
    std::string base_url;
    std::string model;
    std::string api_key_env;
    std::chrono::milliseconds timeout{60000};
    // "sigmoid" maps raw rerank logits into [0,1].
    std::string score_transform = "none";
};

void to_json(nlohmann::json& j, const ProviderSpec& p);
void from_json(const nlohmann::json& j, ProviderSpec& p);

struct HttpGatewayConfig {
    ProviderSpec chat;      // OpenAI-compatible /chat/completions
    ProviderSpec embedding; // OpenAI-compatible /embeddings
    ProviderSpec rerank;    // /rerank returning results[{index, relevance_score}]
    std::optional<ProviderSpec> crossmodal; // /embeddings accepting {"text"} and {"image"} inputs
    std::size_t embed_batch = 64;
    GatewayOptions gateway;
};

// Throws ConfigError when a required provider is missing or malformed.
HttpGatewayConfig http_gateway_config_from_json(const nlohmann::json& providers);

// Gateway backed by OpenAI-compatible HTTP endpoints. 5xx, 429, 408 and
// connection failures raise TransportError; other 4xx and malformed bodies
// raise ProviderError.
class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);

protected:
    std::string do_chat(const ChatRequest& request, const GenerationParams& params,
                        const DeltaSink& on_delta) override;
    std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override;
    std::vector<double> do_rerank(std::string_view query, const std::vector<std::string>& passages) override;
    std::vector<double> do_crossmodal(std::string_view text, std::span<const ImageAsset> images) override;
    std::size_t max_embed_batch() const override { return config_.embed_batch; }

private:
    HttpGatewayConfig config_;
};

// Incremental parser for "data: ..." server-sent event lines of a streamed
// chat completion. Returns content deltas as they complete.
class ChatStreamParser {
public:
    std::vector<std::string> feed(std::string_view bytes);
    bool finished() const noexcept { return finished_; }
    const std::string& finish_reason() const noexcept { return finish_reason_; }

private:
    std::string buffer_;
    bool finished_ = false;
    std::string finish_reason_;
};

} // namespace qsearch::gateway
