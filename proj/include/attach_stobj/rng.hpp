#pragma once

#include <cstdint>
#include <utility>

namespace attach_stobj {

/// splitmix64. Bit-exact so workloads reproduce across implementations.
struct SplitMix64 {
    std::uint64_t state = 0;

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    /// One step: returns (output, next_state).
    static constexpr std::pair<std::uint64_t, std::uint64_t> step(std::uint64_t s) {
        s += kGamma;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return {z ^ (z >> 31), s};
    }

    constexpr std::uint64_t next() {
        auto [out, s] = step(state);
        state = s;
        return out;
    }
};

static_assert(SplitMix64::step(0).first == 0xE220A8397B1DCDAFULL);

}  // namespace attach_stobj
