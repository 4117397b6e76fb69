#include "qsgauc/rff.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>
#include <string>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"

namespace qsgauc {

namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw InvalidInput(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                           ", expected " + std::to_string(want) + ")");
}

// Cody-Waite reduction by pi/2 followed by minimax kernels on [-pi/4, pi/4]
// (the FreeBSD msun coefficients). Pure IEEE double arithmetic, so results do
// not depend on the libm in use.
constexpr double kInvPio2 = 6.36619772367581382433e-01;
constexpr double kPio2_1 = 1.57079632673412561417e+00;   // first 33 bits
constexpr double kPio2_2 = 6.07710050630396597660e-11;   // next 33 bits
constexpr double kPio2_2t = 2.02226624879595063154e-21;  // pi/2 - kPio2_1 - kPio2_2
constexpr double kRoundMagic = 0x1.8p52;
constexpr double kReduceLimit = 0x1p19;

constexpr double S1 = -1.66666666666666324348e-01;
constexpr double S2 = 8.33333333332248946124e-03;
constexpr double S3 = -1.98412698298579493134e-04;
constexpr double S4 = 2.75573137070700676789e-06;
constexpr double S5 = -2.50507602534068634195e-08;
constexpr double S6 = 1.58969099521155010221e-10;

constexpr double C1 = 4.16666666666666019037e-02;
constexpr double C2 = -1.38888888888741095749e-03;
constexpr double C3 = 2.48015872894767294178e-05;
constexpr double C4 = -2.75573143513906633035e-07;
constexpr double C5 = 2.08757232129817482790e-09;
constexpr double C6 = -1.13596475577881948265e-11;

#if defined(__x86_64__) && defined(__GNUC__) && defined(__linux__)
#define QSGAUC_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define QSGAUC_CLONES
#endif

// Branch-free so the loop vectorizes. Quadrant selection works on the bits of
// the magic-rounded multiple of pi/2.
QSGAUC_CLONES bool sin_cos_kernel(const double* angles, double* s, double* c, std::size_t n) {
    // Top bit of |a|'s bits + (2^63 - bits(limit)) is set iff |a| >= limit or a is NaN.
    constexpr std::uint64_t kRangeOffset = (std::uint64_t{1} << 63) - 0x4120000000000000ULL;
    std::uint64_t out_of_range = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = angles[k];
        std::uint64_t abits;
        std::memcpy(&abits, &a, sizeof abits);
        out_of_range |= ((abits & 0x7fffffffffffffffULL) + kRangeOffset) >> 63;
        const double shifted = a * kInvPio2 + kRoundMagic;
        const double q = shifted - kRoundMagic;
        std::uint64_t qbits;
        std::memcpy(&qbits, &shifted, sizeof qbits);
        const double r = ((a - q * kPio2_1) - q * kPio2_2) - q * kPio2_2t;

        const double z = r * r;
        const double w = z * z;
        const double rs = S2 + z * (S3 + z * S4) + z * w * (S5 + z * S6);
        const double ks = r + z * r * (S1 + z * rs);
        const double rc = z * (C1 + z * (C2 + z * C3)) + w * w * (C4 + z * (C5 + z * C6));
        const double hz = 0.5 * z;
        const double one_minus = 1.0 - hz;
        const double kc = one_minus + (((1.0 - one_minus) - hz) + z * rc);

        std::uint64_t sb, cb;
        std::memcpy(&sb, &ks, sizeof sb);
        std::memcpy(&cb, &kc, sizeof cb);
        const std::uint64_t odd = std::uint64_t{0} - (qbits & 1u);
        const std::uint64_t sin_bits = ((sb & ~odd) | (cb & odd)) ^ ((qbits & 2u) << 62);
        const std::uint64_t cos_bits = ((cb & ~odd) | (sb & odd)) ^ (((qbits + 1u) & 2u) << 62);
        std::memcpy(&s[k], &sin_bits, sizeof sin_bits);
        std::memcpy(&c[k], &cos_bits, sizeof cos_bits);
    }
    return out_of_range != 0;
}

void sin_cos_block(const double* angles, double* s, double* c, std::size_t n) {
    if (!sin_cos_kernel(angles, s, c, n))
        return;
    for (std::size_t k = 0; k < n; ++k) {
        if (!(std::fabs(angles[k]) < kReduceLimit)) {
            s[k] = std::sin(angles[k]);
            c[k] = std::cos(angles[k]);
        }
    }
}

// out[k] = w_k . x, accumulated over components in ascending order.
void projections(std::span<const double> x, const FrequencyBlock& block, double* out) {
    const std::size_t n = block.count;
    for (std::size_t k = 0; k < n; ++k)
        out[k] = 0.0;
    for (std::size_t c = 0; c < block.dim; ++c) {
        const double* w = block.frequencies.data() + c * n;
        const double xc = x[c];
        for (std::size_t k = 0; k < n; ++k)
            out[k] += w[k] * xc;
    }
}

std::vector<double>& scratch(std::size_t n) {
    thread_local std::vector<double> buffer;
    if (buffer.size() < n)
        buffer.resize(n);
    return buffer;
}

} // namespace

void sin_cos(double angle, double& s, double& c) noexcept {
    sin_cos_block(&angle, &s, &c, 1);
}

FrequencyBlock sample_frequencies(std::uint64_t seed, std::size_t dim, std::size_t count,
                                  double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidParameter("sample_frequencies: sigma must be positive and finite");
    if (count == 0)
        throw InvalidParameter("sample_frequencies: count must be at least 1");
    if (dim == 0)
        throw InvalidParameter("sample_frequencies: dim must be at least 1");

    FrequencyBlock block;
    block.seed = seed;
    block.dim = dim;
    block.count = count;
    block.sigma = sigma;
    block.frequencies.resize(dim * count);

    RandomStream stream(seed);
    const double scale = std::sqrt(2.0 * sigma);
    for (std::size_t k = 0; k < count; ++k)
        for (std::size_t c = 0; c < dim; ++c)
            block.frequencies[c * count + k] = scale * stream.gaussian();
    return block;
}

std::vector<double> FrequencyBlock::row(std::size_t k) const {
    std::vector<double> out(dim);
    for (std::size_t c = 0; c < dim; ++c)
        out[c] = at(k, c);
    return out;
}

void feature_map_into(std::span<const double> x, const FrequencyBlock& block,
                      std::span<double> out) {
    check_dim(x.size(), block.dim, "feature_map");
    check_dim(out.size(), 2 * block.count, "feature_map output");
    const double scale = std::sqrt(1.0 / static_cast<double>(block.count));
    const std::size_t d = block.count;
    auto& angles = scratch(d);
    projections(x, block, angles.data());
    sin_cos_block(angles.data(), out.data() + d, out.data(), d);
    for (double& v : out)
        v *= scale;
}

FeatureVector feature_map(std::span<const double> x, const FrequencyBlock& block) {
    FeatureVector fv;
    fv.count = block.count;
    fv.values.resize(2 * block.count);
    feature_map_into(x, block, fv.values);
    return fv;
}

double feature_dot(std::span<const double> coeffs, const FrequencyBlock& block,
                   std::span<const double> x) {
    check_dim(x.size(), block.dim, "feature_dot");
    check_dim(coeffs.size(), 2 * block.count, "feature_dot coefficients");
    const double scale = std::sqrt(1.0 / static_cast<double>(block.count));
    const std::size_t d = block.count;
    auto& buffer = scratch(3 * d);
    double* angles = buffer.data();
    double* cosines = angles + d;
    double* sines = cosines + d;
    projections(x, block, angles);
    sin_cos_block(angles, sines, cosines, d);
    double cos_sum = 0.0;
    double sin_sum = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        cos_sum += coeffs[k] * (scale * cosines[k]);
        sin_sum += coeffs[d + k] * (scale * sines[k]);
    }
    return cos_sum + sin_sum;
}

double kernel_exact(std::span<const double> x, std::span<const double> x_prime, double sigma) {
    check_dim(x_prime.size(), x.size(), "kernel_exact");
    if (!(sigma > 0.0))
        throw InvalidParameter("kernel_exact: sigma must be positive");
    double sq = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double diff = x[c] - x_prime[c];
        sq += diff * diff;
    }
    return std::exp(-sigma * sq);
}

} // namespace qsgauc
