#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace qsearch {

struct Warning {
    std::string stage;
    std::string message;
    friend bool operator==(const Warning&, const Warning&) = default;
    friend auto operator<=>(const Warning&, const Warning&) = default;
};

// Thread-safe collector for degraded-mode warnings of one session. Every
// warning is also logged.
class Diagnostics {
public:
    void warn(std::string stage, std::string message);
    // Sorted, so concurrent stages produce a deterministic list.
    std::vector<Warning> sorted() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<Warning> warnings_;
};

// Logs, and records when `diag` is non-null.
void warn(Diagnostics* diag, std::string stage, std::string message);

} // namespace qsearch
