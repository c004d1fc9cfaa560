#include "qsearch/core/diagnostics.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace qsearch {

void Diagnostics::warn(std::string stage, std::string message) {
    std::lock_guard lock(mu_);
    warnings_.push_back(Warning{std::move(stage), std::move(message)});
}

std::vector<Warning> Diagnostics::sorted() const {
    std::lock_guard lock(mu_);
    auto out = warnings_;
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t Diagnostics::size() const {
    std::lock_guard lock(mu_);
    return warnings_.size();
}

void warn(Diagnostics* diag, std::string stage, std::string message) {
    spdlog::warn("[{}] {}", stage, message);
    if (diag != nullptr) {
        diag->warn(std::move(stage), std::move(message));
    }
}

} // namespace qsearch
