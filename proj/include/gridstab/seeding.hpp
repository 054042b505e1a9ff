#pragma once

#include <cstdint>

namespace gridstab {

/// SplitMix64 finalizer. Used wherever a seed must be derived from
/// (base seed, stream, index) so results never depend on scheduling.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return splitmix64(splitmix64(base ^ splitmix64(stream)) + index);
}

// Stream tags keep independent consumers of one base seed apart.
namespace seed_stream {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t model = 2;
inline constexpr std::uint64_t partition = 3;
inline constexpr std::uint64_t curve = 4;
inline constexpr std::uint64_t synth_row = 5;
inline constexpr std::uint64_t tree = 6;
inline constexpr std::uint64_t init = 7;
}  // namespace seed_stream

}  // namespace gridstab
