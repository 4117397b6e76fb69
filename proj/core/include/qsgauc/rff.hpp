#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qsgauc {

/// One iteration's spectral frequencies for the Gaussian kernel
/// k(x, x') = exp(-sigma * |x - x'|^2): a count x dim matrix whose rows are
/// the frequencies. Entries are drawn row by row but stored column-major
/// (`frequencies[c * count + k]` is component c of frequency k).
struct FrequencyBlock {
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::size_t count = 0;
    double sigma = 0.0;
    std::vector<double> frequencies;

    double at(std::size_t k, std::size_t c) const { return frequencies[c * count + k]; }
    std::vector<double> row(std::size_t k) const;
};

/// sqrt(1/D) [cos(w_1.x) .. cos(w_D.x), sin(w_1.x) .. sin(w_D.x)].
struct FeatureVector {
    std::vector<double> values;
    std::size_t count = 0;
};

/// Draws `count` x `dim` entries i.i.d. from N(0, 2 sigma), the spectral
/// density of the Gaussian kernel above. Pure function of its arguments.
FrequencyBlock sample_frequencies(std::uint64_t seed, std::size_t dim, std::size_t count,
                                  double sigma);

FeatureVector feature_map(std::span<const double> x, const FrequencyBlock& block);

/// Writes the feature map of `x` into `out` (length 2 * block.count).
void feature_map_into(std::span<const double> x, const FrequencyBlock& block,
                      std::span<double> out);

/// <coeffs, feature_map(x)> without materializing the feature vector.
///
/// This is the one routine every prediction path goes through, so results
/// are bit-identical wherever a model is evaluated. Summation order: cosine
/// terms ascending, sine terms ascending, then cos_sum + sin_sum.
double feature_dot(std::span<const double> coeffs, const FrequencyBlock& block,
                   std::span<const double> x);

/// Sine and cosine as used by the feature map: a fixed polynomial evaluation
/// in plain double arithmetic, identical on every IEEE-754 platform. Within a
/// couple of ulps of the correctly rounded values for |angle| < 2^19; larger
/// or non-finite angles defer to std::sin / std::cos.
void sin_cos(double angle, double& s, double& c) noexcept;

double kernel_exact(std::span<const double> x, std::span<const double> x_prime, double sigma);

} // namespace qsgauc
