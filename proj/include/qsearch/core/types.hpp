#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qsearch/core/timestamp.hpp"

namespace qsearch {

// Half-open range of code point offsets.
struct CharRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end > start ? end - start : 0; }
    friend bool operator==(const CharRange&, const CharRange&) = default;
};

// Unit-length vector. Normalization happens once, at construction, so cosine
// similarity is a plain dot product everywhere else.
class Embedding {
public:
    Embedding() = default;

    // Throws ContractViolation for empty or all-zero input.
    static Embedding normalized(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t dimension() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    explicit Embedding(std::vector<double> values) : values_(std::move(values)) {}
    std::vector<double> values_;
};

// Throws ContractViolation on dimension mismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

// Returns v / ||v||; throws ContractViolation for a zero vector.
std::vector<double> l2_normalize(std::span<const double> v);

struct ImageAsset {
    std::string url;
    int width = 0; // 0 means unknown
    int height = 0;
    std::string alt_text;
    std::optional<std::string> caption;
    int parent_doc = 0;
};

struct RetrievedDocument {
    int doc_index = 0; // 1-based, unique per session
    std::string url;
    std::string title;
    std::optional<Timestamp> report_time;
    std::string clean_text;
    std::vector<ImageAsset> images;
    std::string source_id;
    int rank_in_source = 0;
};

struct Passage {
    int parent_doc = 0;
    CharRange char_range;
    std::string text;
    std::optional<Embedding> embedding;
    double selection_score = 0.0;
    double rerank_score = 0.0;
};

} // namespace qsearch
