#ifndef SYNTHDSE_RNG_HPP
#define SYNTHDSE_RNG_HPP
//! \file
//! \brief Keyed random streams for the simulator.
//!
//! Every (seed, replicate, cell, purpose) tuple gets its own SplitMix64
//! stream whose starting state is a hash of the key, so the numbers a
//! replicate sees never depend on how replicates are scheduled.

#include <cstdint>
#include <limits>
#include <string_view>

namespace synthdse {

/// Stream identity recorded in reports; bump the version if the key
/// derivation or the output function ever changes.
inline constexpr std::string_view rng_name = "splitmix64-keyed";
inline constexpr int rng_version = 1;

/// SplitMix64 output finalizer (Stafford variant 13).
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Purpose tags keep the truth draws and the measurement draws of one cell
/// on disjoint streams.
enum class StreamPurpose : std::uint64_t { truth = 1, measurement = 2 };

class KeyedStream {
public:
    using result_type = std::uint64_t;

    KeyedStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t cell,
                StreamPurpose purpose) noexcept {
        constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
        std::uint64_t k = mix64(seed + golden);
        k = mix64(k ^ (replicate + 1) * golden);
        k = mix64(k ^ (cell + 1) * 0xD1B54A32D192ED03ULL);
        k = mix64(k ^ static_cast<std::uint64_t>(purpose) * 0x8CB92BA72F3D8DD7ULL);
        state_ = k;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_ = 0;
};

} // namespace synthdse

#endif
