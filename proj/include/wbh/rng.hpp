#pragma once

#include <cstdint>
#include <random>

namespace wbh {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent stream keyed by (seed, stream). The same key always yields the
/// same sequence regardless of which thread asks for it or in what order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mix64(stream)),
                      static_cast<std::uint32_t>(mix64(stream) >> 32),
                      static_cast<std::uint32_t>(mix64(seed ^ mix64(stream)))};
    return Rng(seq);
}

}  // namespace wbh
