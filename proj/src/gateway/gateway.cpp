#include "qsearch/gateway/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <spdlog/spdlog.h>

#include "qsearch/core/utf8.hpp"

namespace qsearch::gateway {

std::string_view to_string(CallKind kind) {
    switch (kind) {
    case CallKind::Chat:
        return "chat";
    case CallKind::Embed:
        return "embed";
    case CallKind::Rerank:
        return "rerank";
    case CallKind::CrossModal:
        return "crossmodal";
    }
    return "unknown";
}

void CallLog::record(CallRecord r) {
    std::lock_guard lock(mu_);
    r.seq = next_seq_++;
    records_.push_back(std::move(r));
}

std::vector<CallRecord> CallLog::snapshot() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t CallLog::count(CallKind kind) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [&](const CallRecord& r) { return r.kind == kind; }));
}

std::size_t CallLog::count_template(std::string_view template_id) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const CallRecord& r) {
        return r.kind == CallKind::Chat && r.template_id == template_id;
    }));
}

void CallLog::clear() {
    std::lock_guard lock(mu_);
    records_.clear();
}

ConcurrencyLimiter::ConcurrencyLimiter(int max_inflight) : max_(max_inflight) {
    if (max_inflight < 1) {
        throw ContractViolation("max_inflight must be at least 1");
    }
}

void ConcurrencyLimiter::acquire() {
    std::unique_lock lock(mu_);
    if (inflight_ >= max_) {
        ++queued_;
        cv_.wait(lock, [&] { return inflight_ < max_; });
    }
    ++inflight_;
    peak_ = std::max(peak_, inflight_);
}

void ConcurrencyLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --inflight_;
    }
    cv_.notify_one();
}

int ConcurrencyLimiter::peak_inflight() const {
    std::lock_guard lock(mu_);
    return peak_;
}

std::uint64_t ConcurrencyLimiter::queued_count() const {
    std::lock_guard lock(mu_);
    return queued_;
}

namespace {
constexpr auto always = [] { return true; };
} // namespace

Gateway::Gateway(GatewayOptions options) : options_(options), limiter_(options.max_inflight) {}

template <typename Fn, typename Retryable>
auto Gateway::with_policy(CallKind kind, const ChatRequest* request, Fn&& fn, Retryable&& retryable) {
    for (int attempt = 0;; ++attempt) {
        CallRecord rec;
        rec.kind = kind;
        if (request != nullptr) {
            rec.template_id = request->template_id;
            rec.key_input = request->key_input;
        }
        try {
            ConcurrencyLimiter::Permit permit(limiter_);
            rec.start = std::chrono::steady_clock::now();
            auto result = fn();
            rec.end = std::chrono::steady_clock::now();
            rec.ok = true;
            log_.record(rec);
            return result;
        } catch (const TransportError& e) {
            rec.end = std::chrono::steady_clock::now();
            log_.record(rec);
            if (attempt >= options_.transport_retries || !retryable()) {
                throw;
            }
            spdlog::warn("{} call failed ({}), retry {}/{}", to_string(kind), e.what(), attempt + 1,
                         options_.transport_retries);
            std::this_thread::sleep_for(options_.backoff_base * (1 << attempt));
        } catch (...) {
            rec.end = std::chrono::steady_clock::now();
            log_.record(rec);
            throw;
        }
    }
}

std::string Gateway::chat_complete(const ChatRequest& request, const GenerationParams& params,
                                   const DeltaSink& on_delta) {
    if (utf8::trim(request.prompt).empty()) {
        throw ContractViolation("chat_complete: prompt must be non-empty");
    }
    bool streamed = false;
    const DeltaSink forward = [&](std::string_view delta) {
        if (!delta.empty()) {
            streamed = true;
        }
        if (on_delta) {
            on_delta(delta);
        }
    };
    return with_policy(
        CallKind::Chat, &request, [&] { return do_chat(request, params, forward); }, [&] { return !streamed; });
}

std::vector<Embedding> Gateway::embed_batch(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> raw;
    try {
        raw = with_policy(CallKind::Embed, nullptr, [&] { return do_embed(texts); }, always);
    } catch (const BatchTooLarge&) {
        if (texts.size() < 2) {
            throw;
        }
        const auto mid = texts.begin() + static_cast<std::ptrdiff_t>(texts.size() / 2);
        auto left = embed_batch(std::vector<std::string>(texts.begin(), mid));
        auto right = embed_batch(std::vector<std::string>(mid, texts.end()));
        left.insert(left.end(), std::make_move_iterator(right.begin()), std::make_move_iterator(right.end()));
        return left;
    }
    if (raw.size() != texts.size()) {
        throw ProviderError("embedding provider returned " + std::to_string(raw.size()) + " vectors for " +
                            std::to_string(texts.size()) + " inputs");
    }
    std::vector<Embedding> out;
    out.reserve(raw.size());
    for (auto& v : raw) {
        out.push_back(Embedding::normalized(std::move(v)));
    }
    return out;
}

std::vector<Embedding> Gateway::embed(const std::vector<std::string>& texts) {
    for (const auto& t : texts) {
        if (utf8::trim(t).empty()) {
            throw ContractViolation("embed: every text must be non-empty");
        }
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    const std::size_t batch = std::max<std::size_t>(1, max_embed_batch());
    for (std::size_t i = 0; i < texts.size(); i += batch) {
        const auto end = std::min(texts.size(), i + batch);
        auto part = embed_batch(std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                                         texts.begin() + static_cast<std::ptrdiff_t>(end)));
        for (auto& e : part) {
            out.push_back(std::move(e));
        }
    }
    for (const auto& e : out) {
        if (e.dimension() != out.front().dimension()) {
            throw ProviderError("embedding provider returned vectors of differing dimension");
        }
    }
    return out;
}

std::vector<double> Gateway::rerank_score(std::string_view query, const std::vector<std::string>& passages) {
    if (passages.empty()) {
        throw ContractViolation("rerank_score: passages must be non-empty");
    }
    auto scores = with_policy(CallKind::Rerank, nullptr, [&] { return do_rerank(query, passages); }, always);
    if (scores.size() != passages.size()) {
        throw ProviderError("rerank provider returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(passages.size()) + " passages");
    }
    for (double& s : scores) {
        s = std::isfinite(s) ? std::clamp(s, 0.0, 1.0) : 0.0;
    }
    return scores;
}

std::vector<double> Gateway::crossmodal_similarity(std::string_view text, std::span<const ImageAsset> images) {
    if (images.empty()) {
        return {};
    }
    auto scores = with_policy(CallKind::CrossModal, nullptr, [&] { return do_crossmodal(text, images); }, always);
    if (scores.size() != images.size()) {
        throw ProviderError("cross-modal provider returned a wrong number of scores");
    }
    for (double& s : scores) {
        s = std::isfinite(s) ? std::clamp(s, -1.0, 1.0) : 0.0;
    }
    return scores;
}

std::vector<double> Gateway::do_crossmodal(std::string_view, std::span<const ImageAsset>) {
    throw CapabilityUnavailable("no cross-modal model configured");
}

} // namespace qsearch::gateway
