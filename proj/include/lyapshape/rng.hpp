#pragma once

#include <cstdint>

namespace lyapshape {

/// Counter-based stream: draw t of replica r is a pure function of
/// (seed, r, t), so replicas are independent streams and any step can be
/// regenerated without replaying the ones before it. Mixing is the
/// SplitMix64 finalizer.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t replica) noexcept
        : key_(mix(seed ^ mix(replica * kGolden + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t bits(std::uint64_t counter) const noexcept { return mix(key_ + (counter + 1) * kGolden); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t key_;
};

} // namespace lyapshape
