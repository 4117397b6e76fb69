#include "qsgauc/random.hpp"

#include <cmath>
#include <numbers>

#include "qsgauc/error.hpp"

namespace qsgauc {

std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(mix64(master) ^ stream);
}

std::uint64_t feature_seed(std::uint64_t master, std::uint64_t iteration) noexcept {
    return derive_seed(derive_seed(master, static_cast<std::uint64_t>(StreamDomain::Features)),
                       iteration);
}

std::uint64_t sampling_seed(std::uint64_t master) noexcept {
    return derive_seed(master, static_cast<std::uint64_t>(StreamDomain::Sampling));
}

double RandomStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open01() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gaussian_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform_open01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
}

std::uint64_t RandomStream::index(std::uint64_t n) {
    if (n == 0)
        throw InvalidParameter("RandomStream::index: n must be positive");
    // Largest multiple of n representable is 2^64 - (2^64 mod n).
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t u = engine_();
        if (u >= threshold)
            return u % n;
    }
}

} // namespace qsgauc
