#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsearch/core/errors.hpp"
#include "qsearch/core/types.hpp"

namespace qsearch::gateway {

struct GenerationParams {
    double temperature = 0.7;
    int max_tokens = 2048;
    std::vector<std::string> stop;
};

// Judge calls must be deterministic.
inline GenerationParams judge_params() {
    GenerationParams p;
    p.temperature = 0.0;
    return p;
}

// A rendered prompt plus the identity the stub uses to find a fixture:
// the template id and the template's primary input (the "key").
struct ChatRequest {
    std::string template_id;
    std::string key_input;
    std::string prompt;
};

using DeltaSink = std::function<void(std::string_view)>;

enum class CallKind { Chat, Embed, Rerank, CrossModal };

std::string_view to_string(CallKind kind);

struct CallRecord {
    std::uint64_t seq = 0;
    CallKind kind = CallKind::Chat;
    std::string template_id; // chat only
    std::string key_input;   // chat only
    std::chrono::steady_clock::time_point start;
    std::chrono::steady_clock::time_point end;
    bool ok = false;
};

class CallLog {
public:
    void record(CallRecord r);
    std::vector<CallRecord> snapshot() const;
    std::size_t count(CallKind kind) const;
    std::size_t count_template(std::string_view template_id) const;
    void clear();

private:
    mutable std::mutex mu_;
    std::vector<CallRecord> records_;
    std::uint64_t next_seq_ = 0;
};

// Counting limiter for outstanding model calls. Excess callers wait.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int max_inflight);

    class Permit {
    public:
        explicit Permit(ConcurrencyLimiter& l) : limiter_(&l) { limiter_->acquire(); }
        ~Permit() { limiter_->release(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;

    private:
        ConcurrencyLimiter* limiter_;
    };

    int max_inflight() const noexcept { return max_; }
    int peak_inflight() const;
    // Number of acquisitions that had to wait for a free slot.
    std::uint64_t queued_count() const;

private:
    void acquire();
    void release();

    const int max_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int inflight_ = 0;
    int peak_ = 0;
    std::uint64_t queued_ = 0;
};

// Raised by providers when a batch exceeds their limits; embed() splits and retries.
class BatchTooLarge : public ProviderError {
public:
    using ProviderError::ProviderError;
};

struct GatewayOptions {
    int max_inflight = 8;
    int transport_retries = 2;
    std::chrono::milliseconds backoff_base{50};
};

// Uniform access to chat generation, embeddings, reranking and cross-modal
// scoring. Public methods enforce preconditions, the concurrency limit, the
// retry policy and call logging; implementations override the do_* hooks.
class Gateway {
public:
    explicit Gateway(GatewayOptions options);
    virtual ~Gateway() = default;
    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    // Streams deltas to `on_delta` and returns the full completion. Transport
    // errors are retried only while nothing has been streamed yet.
    std::string chat_complete(const ChatRequest& request, const GenerationParams& params,
                              const DeltaSink& on_delta = {});

    // Unit-norm embeddings, one per input, order preserved.
    std::vector<Embedding> embed(const std::vector<std::string>& texts);

    // Relevance in [0,1] per passage, order preserved.
    std::vector<double> rerank_score(std::string_view query, const std::vector<std::string>& passages);

    // Raw cosine in [-1,1] between a text and each image. Throws
    // CapabilityUnavailable when the gateway has no cross-modal model.
    std::vector<double> crossmodal_similarity(std::string_view text, std::span<const ImageAsset> images);

    CallLog& call_log() noexcept { return log_; }
    const ConcurrencyLimiter& limiter() const noexcept { return limiter_; }

protected:
    virtual std::string do_chat(const ChatRequest& request, const GenerationParams& params,
                                const DeltaSink& on_delta) = 0;
    virtual std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) = 0;
    virtual std::vector<double> do_rerank(std::string_view query, const std::vector<std::string>& passages) = 0;
    virtual std::vector<double> do_crossmodal(std::string_view text, std::span<const ImageAsset> images);
    virtual std::size_t max_embed_batch() const { return 64; }

private:
    template <typename Fn, typename Retryable>
    auto with_policy(CallKind kind, const ChatRequest* request, Fn&& fn, Retryable&& retryable);

    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);

    GatewayOptions options_;
    ConcurrencyLimiter limiter_;
    CallLog log_;
};

} // namespace qsearch::gateway
