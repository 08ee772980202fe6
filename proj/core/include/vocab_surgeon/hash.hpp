#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace vs {

struct Hash128 {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    friend bool operator==(const Hash128&, const Hash128&) = default;
};

struct Hash128Hasher {
    std::size_t operator()(const Hash128& h) const noexcept {
        return static_cast<std::size_t>(h.lo ^ (h.hi * 0x9e3779b97f4a7c15ULL));
    }
};

/// MurmurHash3 x64 128-bit.
Hash128 murmur3_128(std::string_view data, std::uint64_t seed = 0);

/// 64-bit convenience variant (low half of the 128-bit digest).
std::uint64_t murmur3_64(std::string_view data, std::uint64_t seed = 0);

/// Lowercase hex rendering, hi then lo, 32 digits.
std::string to_hex(const Hash128& h);

}  // namespace vs
