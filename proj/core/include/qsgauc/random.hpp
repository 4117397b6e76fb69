#pragma once

#include <cstdint>
#include <random>

namespace qsgauc {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) noexcept;

/// Child seed for `stream` under `master`: mix64(mix64(master) ^ stream).
/// Distinct streams under one master never collide.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Stream domains under a master seed.
enum class StreamDomain : std::uint64_t {
    Features = 0x6665617475726573ULL,  // "features"
    Sampling = 0x73616d706c696e67ULL,  // "sampling"
    Repeats = 0x7265706561747321ULL,
};

/// Seed of the frequency block used at training iteration `iteration` (1-based).
std::uint64_t feature_seed(std::uint64_t master, std::uint64_t iteration) noexcept;

/// Seed of the data-sampling stream of one training run.
std::uint64_t sampling_seed(std::uint64_t master) noexcept;

/// Seeded pseudo-random stream.
///
/// Built on std::mt19937_64, whose output sequence is fixed by the standard.
/// The derived variates avoid the implementation-defined std distributions:
///   uniform01   = (u >> 11) * 2^-53
///   gaussian    = Box-Muller on two open-interval uniforms, returning the
///                 cosine branch first and the cached sine branch second
///   index(n)    = rejection sampling on the raw 64-bit output
/// so a given seed produces the same variates on every conforming platform.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform01();

    /// Uniform on (0, 1).
    double uniform_open01();

    /// Standard normal.
    double gaussian();

    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
};

} // namespace qsgauc
