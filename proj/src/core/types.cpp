#include "qsearch/core/types.hpp"

#include <cmath>
#include <string>

#include "qsearch/core/errors.hpp"

namespace qsearch {

std::vector<double> l2_normalize(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    if (v.empty() || !(sq > 0.0) || !std::isfinite(sq)) {
        throw ContractViolation("cannot normalize an empty, zero or non-finite vector");
    }
    const double inv = 1.0 / std::sqrt(sq);
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) {
        x *= inv;
    }
    return out;
}

Embedding Embedding::normalized(std::vector<double> values) {
    return Embedding(l2_normalize(values));
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dimension() != b.dimension()) {
        throw ContractViolation("embedding dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                                std::to_string(b.dimension()));
    }
    const auto av = a.values();
    const auto bv = b.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        dot += av[i] * bv[i];
    }
    // Rounding can push a unit dot product marginally past 1.
    if (dot > 1.0) {
        return 1.0;
    }
    if (dot < -1.0) {
        return -1.0;
    }
    return dot;
}

} // namespace qsearch
