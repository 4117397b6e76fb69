#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qsgauc {

using Point = std::vector<double>;
using PointSet = std::vector<Point>;

/// The three training pools. Unlabeled points carry no labels.
struct SemiSupervisedDataset {
    PointSet positives;
    PointSet negatives;
    PointSet unlabeled;
    std::size_t dim = 0;
    std::string provenance;

    std::size_t total() const noexcept {
        return positives.size() + negatives.size() + unlabeled.size();
    }

    /// Throws InvalidInput if a vector has the wrong length or a non-finite value.
    void validate() const;
};

/// Dense labeled points (test sets, hidden unlabeled truth).
struct LabeledPoints {
    PointSet points;
    std::vector<int> labels;  // +1 / -1

    std::size_t size() const noexcept { return points.size(); }
};

/// Sparse LIBSVM rows before splitting. Feature indices are 1-based and
/// strictly increasing within a row.
struct LabeledDataset {
    struct Row {
        int label = 1;
        std::vector<std::pair<std::uint32_t, double>> features;

        friend bool operator==(const Row&, const Row&) = default;
    };

    std::vector<Row> rows;
    std::size_t dim = 0;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Parses "LABEL idx:val idx:val ... [# comment]" lines. Labels must be +1 or -1
/// ("+1", "1", "-1", or any numeric spelling of those values). Blank lines are
/// skipped. Throws ParseError carrying the line number and offending token.
LabeledDataset parse_libsvm(std::istream& in);
LabeledDataset read_libsvm_file(const std::string& path);

/// Inverse of parse_libsvm; values use the shortest round-trip decimal form.
void write_libsvm(const LabeledDataset& ds, std::ostream& out);

Point densify(const LabeledDataset::Row& row, std::size_t dim);
LabeledPoints densify(const LabeledDataset& ds, std::size_t dim);
LabeledPoints densify(const LabeledDataset& ds);

/// Per-feature min-max table. Index 0 is feature 1.
struct MinMaxTable {
    std::vector<double> min;
    std::vector<double> max;

    /// Maps one value of feature `feature` (0-based) into [0, 1], clamping.
    /// Constant features map to 0.
    double apply(std::size_t feature, double value) const;

    LabeledDataset apply(const LabeledDataset& ds) const;
    void write(std::ostream& out) const;
};

/// Scales each feature to [0, 1] using its observed range. Absent sparse
/// entries count as 0 when computing the range.
std::pair<LabeledDataset, MinMaxTable> normalize_unit_interval(const LabeledDataset& ds);

struct SplitOptions {
    std::size_t n_labeled = 200;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    std::size_t max_retries = 16;
};

/// Row indices (into the input dataset) assigned to each pool.
struct SplitManifest {
    std::vector<std::size_t> labeled;
    std::vector<std::size_t> unlabeled;
    std::vector<std::size_t> test;

    void write(std::ostream& out) const;
};

struct SplitResult {
    SemiSupervisedDataset train;
    LabeledPoints test;
    /// True labels of train.unlabeled, in pool order; never used for training.
    std::vector<int> unlabeled_labels;
    SplitManifest manifest;
};

/// Holds out a class-stratified test fraction, draws n_labeled labeled rows
/// from the rest, and leaves the remainder unlabeled. Retries the labeled draw
/// until both classes are present, up to max_retries.
SplitResult split_semi(const LabeledDataset& ds, const SplitOptions& options);

struct SynthOptions {
    std::size_t n_p = 100;
    std::size_t n_n = 100;
    std::size_t n_u = 1000;
    std::size_t n_test = 1000;
    std::size_t dim = 2;
    double separation = 2.0;
    double prior = 0.5;
    std::uint64_t seed = 0;
};

struct SynthResult {
    SemiSupervisedDataset train;
    LabeledPoints test;
    std::vector<int> unlabeled_labels;
};

/// Positives ~ N(+s/2 e1, I), negatives ~ N(-s/2 e1, I). Unlabeled points and
/// the test labels are drawn from the prior-weighted mixture.
SynthResult synth_gaussian(const SynthOptions& options);

/// Dense points back to sparse rows (exact zeros omitted).
LabeledDataset to_labeled(const PointSet& points, const std::vector<int>& labels);

/// The labeled pools as rows: positives (+1) followed by negatives (-1).
LabeledDataset labeled_pools(const SemiSupervisedDataset& ds);

} // namespace qsgauc
