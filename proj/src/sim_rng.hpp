#pragma once

#include <cstdint>

namespace costcal::detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { Brownian = 0, Jumps = 1 };

// Independent substreams per (seed, path, purpose). Brownian and jump draws use
// separate engines so adding a zero-rate atom leaves the Brownian path intact.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t path, Stream purpose) {
    return splitmix64(splitmix64(seed ^ splitmix64(path)) + static_cast<std::uint64_t>(purpose));
}

}  // namespace costcal::detail
