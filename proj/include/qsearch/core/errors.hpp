#pragma once

#include <stdexcept>
#include <string>

namespace qsearch {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition or an internal invariant failed.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Network failure or timeout talking to a model provider. Retryable.
class TransportError : public Error {
public:
    using Error::Error;
};

// The provider answered but refused or rejected the request. Not retried.
class ProviderError : public Error {
public:
    using Error::Error;
};

// The provider does not offer the requested capability (e.g. cross-modal scoring).
class CapabilityUnavailable : public Error {
public:
    using Error::Error;
};

class RetrievalError : public Error {
public:
    using Error::Error;
};

// A metric is undefined for its input (empty set, zero variance).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

// Unrecoverable pipeline failure carrying a stable machine-readable code.
class PipelineError : public Error {
public:
    PipelineError(std::string code, const std::string& message)
        : Error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace qsearch
