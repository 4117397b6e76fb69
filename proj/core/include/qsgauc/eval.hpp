#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "qsgauc/data.hpp"
#include "qsgauc/oracle.hpp"
#include "qsgauc/trainer.hpp"

namespace qsgauc {

/// Wilcoxon-Mann-Whitney AUC with midranks for ties. O(m log m).
/// Throws InvalidInput unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct CvGrid {
    std::vector<double> lambda_values;
    std::vector<double> sigma_values;
    std::vector<double> gamma_values;
    std::size_t folds = 5;

    /// lambda, sigma in {2^-3, ..., 2^3}; gamma in {0.0, 0.1, ..., 1.0}; 5 folds.
    static CvGrid defaults();
    void validate() const;
};

struct CvCell {
    double lambda = 0.0;
    double sigma = 0.0;
    double gamma = 0.0;
    double mean_auc = 0.0;
    std::size_t folds_used = 0;
    double wall_seconds = 0.0;
};

struct CvResult {
    Hyperparams best;
    std::vector<CvCell> cells;  ///< lambda-major, then sigma, then gamma

    /// Tab-separated grid table; `with_timing` adds the wall-clock column.
    void write(std::ostream& out, bool with_timing = true) const;
};

/// k-fold cross-validation over the labeled pools (stratified by class); the
/// unlabeled pool is shared by every fold. For each cell theta is rescaled so
/// that theta * lambda stays at base.theta * base.lambda. Best cell: highest
/// mean AUC, ties broken by larger lambda, then larger sigma, then smaller gamma.
CvResult cross_validate(const SemiSupervisedDataset& dataset, const CvGrid& grid,
                        const Hyperparams& base, std::uint64_t seed,
                        const TrainOptions& options = {}, std::size_t threads = 1);

struct ConvergenceReport {
    std::vector<std::size_t> iterations;
    std::vector<double> mse_vs_fstar;
    std::vector<std::vector<double>> mse_per_repeat;  ///< [repeat][probed iteration]
    double fitted_slope = 0.0;
    double fitted_intercept = 0.0;
    bool slope_defined = false;  ///< false when fewer than two usable points

    void write(std::ostream& out) const;
};

struct ConvergenceOptions {
    std::size_t t_min = 100;
    std::size_t points_per_decade = 5;
    std::size_t threads = 1;
};

/// Logarithmically spaced iterations in [t_min, t_max], deduplicated, always
/// including both ends.
std::vector<std::size_t> log_spaced_iterations(std::size_t t_min, std::size_t t_max,
                                               std::size_t points_per_decade);

/// Least-squares slope and intercept of log(y) on log(x).
std::pair<double, double> loglog_fit(std::span<const std::size_t> x, std::span<const double> y);

/// The report restricted to the first `repeats` repeats, refitted.
ConvergenceReport first_repeats(const ConvergenceReport& report, std::size_t repeats);

/// Mean over probes and repeats of |f_{t+1}(x) - f*(x)|^2 at log-spaced t.
/// Repeat r trains with master seed derive_seed(hp.master_seed, r).
/// With hp.iterations == 0 the report holds one row at t = 0 (the zero model)
/// and no slope.
ConvergenceReport convergence_study(const SemiSupervisedDataset& dataset, const Hyperparams& hp,
                                    const KernelModel& fstar, const PointSet& probes,
                                    std::size_t repeats, const ConvergenceOptions& options = {});

/// Runs task(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

} // namespace qsgauc
