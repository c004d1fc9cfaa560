#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsearch/gateway/gateway.hpp"

namespace qsearch::testing {

// Gateway whose every capability is a plain function, for tests that need
// exact scores or vectors.
class ScriptedGateway : public gateway::Gateway {
public:
    std::function<std::string(const gateway::ChatRequest&)> chat = [](const gateway::ChatRequest&) {
        return std::string();
    };
    std::function<std::vector<double>(const std::string&)> embedding = [](const std::string&) {
        return std::vector<double>{1.0, 0.0};
    };
    std::function<double(std::string_view, const std::string&)> rerank = [](std::string_view, const std::string&) {
        return 0.0;
    };
    // Unset means the capability is unavailable.
    std::function<double(std::string_view, const ImageAsset&)> crossmodal;

    ScriptedGateway() : Gateway(gateway::GatewayOptions{4, 0, std::chrono::milliseconds(0)}) {}

protected:
    std::string do_chat(const gateway::ChatRequest& r, const gateway::GenerationParams&,
                        const gateway::DeltaSink& on_delta) override {
        std::string out = chat(r);
        if (on_delta && !out.empty()) {
            on_delta(out);
        }
        return out;
    }
    std::vector<std::vector<double>> do_embed(const std::vector<std::string>& texts) override {
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) {
            out.push_back(embedding(t));
        }
        return out;
    }
    std::vector<double> do_rerank(std::string_view q, const std::vector<std::string>& passages) override {
        std::vector<double> out;
        for (const auto& p : passages) {
            out.push_back(rerank(q, p));
        }
        return out;
    }
    std::vector<double> do_crossmodal(std::string_view text, std::span<const ImageAsset> images) override {
        if (!crossmodal) {
            throw CapabilityUnavailable("scripted: no cross-modal model");
        }
        std::vector<double> out;
        for (const auto& img : images) {
            out.push_back(crossmodal(text, img));
        }
        return out;
    }
};

} // namespace qsearch::testing
