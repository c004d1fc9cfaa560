#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qsearch {

// Lowercase hex SHA-256 of the UTF-8 bytes.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a, optionally seeded by mixing the seed into the offset basis.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

} // namespace qsearch
