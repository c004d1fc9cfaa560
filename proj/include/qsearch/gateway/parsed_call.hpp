#pragma once

#include <optional>
#include <string_view>

#include "qsearch/gateway/gateway.hpp"

namespace qsearch::gateway {

// Calls the model up to `attempts` times until `parse` accepts the reply.
// Gateway errors propagate; nullopt means every reply was unparseable.
template <typename Parse>
auto complete_parsed(Gateway& gw, const ChatRequest& request, const GenerationParams& params, int attempts,
                     Parse&& parse) -> decltype(parse(std::string_view{})) {
    for (int i = 0; i < attempts; ++i) {
        const std::string reply = gw.chat_complete(request, params);
        if (auto parsed = parse(std::string_view(reply))) {
            return parsed;
        }
    }
    return std::nullopt;
}

} // namespace qsearch::gateway
