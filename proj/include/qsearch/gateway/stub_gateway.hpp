#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "qsearch/gateway/gateway.hpp"

namespace qsearch::gateway {

struct StubOptions {
    std::filesystem::path fixture_dir;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 64;
    bool crossmodal = true;
    std::chrono::milliseconds call_latency{0};
    std::chrono::milliseconds delta_delay{0};
    GatewayOptions gateway;
};

// Relative fixture path for a chat request: "<template_id>/<sha256(key)[0:16]>.txt".
std::string fixture_relpath(std::string_view template_id, std::string_view key_input);

// Deterministic offline gateway.
//
// Chat responses come from fixture files keyed by template id and primary
// input; requests without a fixture get a canned per-template fallback.
// Embeddings are seeded character-trigram hash projections, rerank scores are
// token Jaccard, and cross-modal similarity compares the embedding of the
// text with that of the image's alt text and caption.
class StubGateway : public Gateway {
public:
    explicit StubGateway(StubOptions options);

    // Called before every call with its kind and (for chat) the request; may
    // throw to inject failures.
    using FaultHook = std::function<void(CallKind, const ChatRequest*)>;
    // Called before emitting the delta with the given index; may throw.
    using DeltaHook = std::function<void(const ChatRequest&, std::size_t delta_index)>;

    void set_fault_hook(FaultHook hook);
    void set_delta_hook(DeltaHook hook);

    // The canned answer for a request without a fixture.
    static std::string fallback_response(const ChatRequest& request);

    std::vector<double> embed_raw(std::string_view text) const;

protected:
    std::string do_chat(const ChatRequest& request, const GenerationParams& params,
                        const DeltaSink& on_delta) override;
    std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override;
    std::vector<double> do_rerank(std::string_view query, const std::vector<std::string>& passages) override;
    std::vector<double> do_crossmodal(std::string_view text, std::span<const ImageAsset> images) override;

private:
    void before_call(CallKind kind, const ChatRequest* request);

    StubOptions options_;
    std::mutex hook_mu_;
    FaultHook fault_hook_;
    DeltaHook delta_hook_;
};

// Splits a completion into stream deltas of a few words each. Any text with
// two or more code points yields at least two deltas.
std::vector<std::string> split_into_deltas(std::string_view text);

} // namespace qsearch::gateway
