#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qsgauc/rff.hpp"

namespace qsgauc {

/// The trained model: one feature-space coefficient per iteration.
///
/// Entry i (1-based) holds alpha_i = scale_i * direction_i, with direction_i
/// of length 2 * feature_count. The trainer appends raw gradient directions
/// with scale -eta_i; decaying the history rescales every existing entry.
/// Frequencies are never stored: entry i is evaluated against the block
/// regenerated from feature_seed(master_seed, i).
class CoefficientHistory {
public:
    CoefficientHistory(std::size_t dim, std::size_t feature_count, double sigma,
                       std::uint64_t master_seed);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t feature_count() const noexcept { return feature_count_; }
    std::size_t coefficient_length() const noexcept { return 2 * feature_count_; }
    double sigma() const noexcept { return sigma_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }

    /// Number of iterations recorded.
    std::size_t size() const noexcept { return scales_.size(); }
    bool empty() const noexcept { return scales_.empty(); }

    /// Appends entry size()+1. Rejects wrong length or non-finite values.
    void append(std::span<const double> direction, double scale);

    /// Multiplies every existing alpha by `factor`.
    void decay(double factor) noexcept;

    /// 1-based accessors.
    double scale(std::size_t iteration) const;
    std::span<const double> direction(std::size_t iteration) const;
    std::vector<double> alpha(std::size_t iteration) const;

    /// All scales, entry 1 first.
    std::span<const double> scales() const noexcept { return scales_; }

    /// Frequencies of entry `iteration`, regenerated from the master seed.
    FrequencyBlock block(std::size_t iteration) const;

    /// Every alpha multiplied by c.
    CoefficientHistory scaled(double c) const;

    /// First `iterations` entries.
    CoefficientHistory prefix(std::size_t iterations) const;

    friend bool operator==(const CoefficientHistory&, const CoefficientHistory&) = default;

private:
    std::size_t dim_;
    std::size_t feature_count_;
    double sigma_;
    std::uint64_t master_seed_;
    std::vector<double> scales_;
    std::vector<double> directions_;
};

/// sum_i scale_i * feature_dot(direction_i, block_i, x), ascending i; 0 when empty.
double predict(const CoefficientHistory& model, std::span<const double> x);

/// Elementwise equal to predict; each block is regenerated once per batch.
std::vector<double> predict_batch(const CoefficientHistory& model,
                                  const std::vector<std::vector<double>>& xs);

/// Model file, format version 1:
///
///   qsgauc-model 1
///   dim <d>
///   feature_count <D>
///   sigma <hexfloat>
///   master_seed <u64>
///   entries <t>
///   <i> <scale> <c_1> ... <c_2D>      one row per iteration, ascending
///   end
///
/// Reals are C99 hexadecimal floats, so a round trip is exact.
void save(const CoefficientHistory& model, std::ostream& sink);
CoefficientHistory load(std::istream& source);

void save_file(const CoefficientHistory& model, const std::string& path);
CoefficientHistory load_file(const std::string& path);

} // namespace qsgauc
