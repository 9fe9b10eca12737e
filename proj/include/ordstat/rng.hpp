// SPDX-License-Identifier: MIT
//
// Splittable pseudo-random generator for the Monte Carlo oracles.
//
// Reproducibility across parallel shards is a hard requirement: estimates
// must be bit-identical for a fixed (seed, shard count) regardless of
// thread scheduling or platform.  We therefore avoid std::uniform_real
// (implementation-defined) and the std engines' seeding conventions, and
// use a splitmix64 stream per shard: each shard derives an independent
// stream from (seed, shard index) by mixing, and doubles are produced from
// the high 53 bits with exact IEEE arithmetic.

#pragma once

#include <cstdint>

namespace ordstat {

namespace detail {
/// Finalizer from splitmix64; a high-quality 64-bit mixing function.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
} // namespace detail

/// splitmix64 engine.  Streams derived via split() are statistically
/// independent for distinct keys.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// Derive the engine for a sub-stream (e.g. a Monte Carlo shard).
    static SplitMix64 split(std::uint64_t seed, std::uint64_t stream) {
        // Mix the stream id into the seed so that consecutive shard
        // indices land in unrelated regions of the state space.
        return SplitMix64(detail::mix64(seed ^ detail::mix64(stream * 0x9E3779B97F4A7C15ull + 1)));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1), using the top 53 bits (exact, portable).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

} // namespace ordstat
