#include "qsgauc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "qsgauc/error.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/table.hpp"

namespace qsgauc {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw InvalidInput("auc: scores and labels differ in length");
    std::size_t n_pos = 0;
    for (int y : labels)
        n_pos += y > 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw InvalidInput("auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of midranks (1-based) of the positives.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && scores[order[j]] == scores[order[i]])
            ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] > 0)
                rank_sum += midrank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

CvGrid CvGrid::defaults() {
    CvGrid grid;
    for (int e = -3; e <= 3; ++e) {
        grid.lambda_values.push_back(std::ldexp(1.0, e));
        grid.sigma_values.push_back(std::ldexp(1.0, e));
    }
    for (int g = 0; g <= 10; ++g)
        grid.gamma_values.push_back(g / 10.0);
    grid.folds = 5;
    return grid;
}

void CvGrid::validate() const {
    if (lambda_values.empty() || sigma_values.empty() || gamma_values.empty())
        throw InvalidParameter("cv grid: every value list must be nonempty");
    if (folds < 2)
        throw InvalidParameter("cv grid: folds must be at least 2");
    for (double v : lambda_values)
        if (!(v > 0.0))
            throw InvalidParameter("cv grid: lambda values must be positive");
    for (double v : sigma_values)
        if (!(v > 0.0))
            throw InvalidParameter("cv grid: sigma values must be positive");
    for (double v : gamma_values)
        if (!(v >= 0.0 && v <= 1.0))
            throw InvalidParameter("cv grid: gamma values must lie in [0, 1]");
}

void CvResult::write(std::ostream& out, bool with_timing) const {
    out << "lambda\tsigma\tgamma\tmean_auc\tfolds_used";
    if (with_timing)
        out << "\twall_seconds";
    out << '\n';
    for (const auto& c : cells) {
        out << format_real(c.lambda) << '\t' << format_real(c.sigma) << '\t'
            << format_real(c.gamma) << '\t' << format_real(c.mean_auc) << '\t' << c.folds_used;
        if (with_timing)
            out << '\t' << format_real(c.wall_seconds);
        out << '\n';
    }
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& w : workers)
        w.join();
    if (failure)
        std::rethrow_exception(failure);
}

namespace {

struct Fold {
    SemiSupervisedDataset train;
    PointSet valid_points;
    std::vector<int> valid_labels;
};

std::vector<Fold> make_folds(const SemiSupervisedDataset& ds, std::size_t k, std::uint64_t seed) {
    RandomStream stream(derive_seed(seed, 0x666f6c6473ULL));
    auto assign = [&](std::size_t n) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[stream.index(i)]);
        std::vector<std::size_t> fold_of(n);
        for (std::size_t r = 0; r < n; ++r)
            fold_of[perm[r]] = r % k;
        return fold_of;
    };
    const auto fold_p = assign(ds.positives.size());
    const auto fold_n = assign(ds.negatives.size());

    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        Fold& fold = folds[f];
        fold.train.dim = ds.dim;
        fold.train.unlabeled = ds.unlabeled;
        fold.train.provenance = ds.provenance + " fold " + std::to_string(f);
        for (std::size_t i = 0; i < ds.positives.size(); ++i) {
            if (fold_p[i] == f) {
                fold.valid_points.push_back(ds.positives[i]);
                fold.valid_labels.push_back(1);
            } else {
                fold.train.positives.push_back(ds.positives[i]);
            }
        }
        for (std::size_t j = 0; j < ds.negatives.size(); ++j) {
            if (fold_n[j] == f) {
                fold.valid_points.push_back(ds.negatives[j]);
                fold.valid_labels.push_back(-1);
            } else {
                fold.train.negatives.push_back(ds.negatives[j]);
            }
        }
    }
    return folds;
}

bool degenerate(const Fold& fold) {
    const bool has_pos = std::find(fold.valid_labels.begin(), fold.valid_labels.end(), 1) !=
                         fold.valid_labels.end();
    const bool has_neg = std::find(fold.valid_labels.begin(), fold.valid_labels.end(), -1) !=
                         fold.valid_labels.end();
    return !has_pos || !has_neg || fold.train.positives.empty() || fold.train.negatives.empty();
}

// Strict "a is preferred over b".
bool better(const CvCell& a, const CvCell& b) {
    if (a.mean_auc != b.mean_auc)
        return a.mean_auc > b.mean_auc;
    if (a.lambda != b.lambda)
        return a.lambda > b.lambda;
    if (a.sigma != b.sigma)
        return a.sigma > b.sigma;
    return a.gamma < b.gamma;
}

} // namespace

CvResult cross_validate(const SemiSupervisedDataset& dataset, const CvGrid& grid,
                        const Hyperparams& base, std::uint64_t seed, const TrainOptions& options,
                        std::size_t threads) {
    grid.validate();
    dataset.validate();
    if (dataset.positives.size() + dataset.negatives.size() < grid.folds)
        throw InvalidInput("cross_validate: fewer labeled points than folds");

    const std::vector<Fold> folds = make_folds(dataset, grid.folds, seed);
    std::vector<bool> usable(folds.size());
    std::size_t n_usable = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        usable[f] = !degenerate(folds[f]);
        if (!usable[f])
            std::cerr << "warning: cross_validate: fold " << f
                      << " lacks one class and is skipped\n";
        n_usable += usable[f];
    }
    if (n_usable == 0)
        throw InvalidInput("cross_validate: every fold is degenerate (single class)");

    const double schedule = base.theta * base.lambda;
    CvResult result;
    for (double lambda : grid.lambda_values)
        for (double sigma : grid.sigma_values)
            for (double gamma : grid.gamma_values)
                result.cells.push_back({lambda, sigma, gamma, 0.0, 0, 0.0});

    auto cell_params = [&](const CvCell& cell) {
        Hyperparams hp = base;
        hp.lambda = cell.lambda;
        hp.sigma = cell.sigma;
        hp.gamma = cell.gamma;
        hp.theta = schedule / cell.lambda;
        return hp;
    };
    for (const auto& cell : result.cells)
        cell_params(cell).validate();

    parallel_for(result.cells.size(), threads, [&](std::size_t c) {
        CvCell& cell = result.cells[c];
        const Hyperparams hp = cell_params(cell);
        const auto start = std::chrono::steady_clock::now();
        double total = 0.0;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            if (!usable[f])
                continue;
            const TrainResult trained = train(folds[f].train, hp, options);
            const auto scores = predict_batch(trained.model, folds[f].valid_points);
            total += auc(scores, folds[f].valid_labels);
            ++cell.folds_used;
        }
        cell.mean_auc = total / static_cast<double>(cell.folds_used);
        cell.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    const CvCell* best = &result.cells.front();
    for (const auto& cell : result.cells)
        if (better(cell, *best))
            best = &cell;
    result.best = cell_params(*best);
    return result;
}

void ConvergenceReport::write(std::ostream& out) const {
    out << "iteration\tmse_vs_fstar\n";
    for (std::size_t i = 0; i < iterations.size(); ++i)
        out << iterations[i] << '\t' << format_real(mse_vs_fstar[i]) << '\n';
    out << "# slope\t" << (slope_defined ? format_real(fitted_slope) : "nan") << '\n';
    out << "# intercept\t" << (slope_defined ? format_real(fitted_intercept) : "nan") << '\n';
}

std::vector<std::size_t> log_spaced_iterations(std::size_t t_min, std::size_t t_max,
                                               std::size_t points_per_decade) {
    if (t_min == 0 || t_min > t_max || points_per_decade == 0)
        throw InvalidParameter("log_spaced_iterations: need 1 <= t_min <= t_max and a positive density");
    std::vector<std::size_t> out{t_min};
    const double lo = std::log10(static_cast<double>(t_min));
    const double hi = std::log10(static_cast<double>(t_max));
    const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) * double(points_per_decade)));
    for (std::size_t s = 1; s <= steps; ++s) {
        const double e = lo + (hi - lo) * double(s) / double(steps);
        const auto t = static_cast<std::size_t>(std::llround(std::pow(10.0, e)));
        if (t > out.back() && t <= t_max)
            out.push_back(t);
    }
    if (out.back() != t_max)
        out.push_back(t_max);
    return out;
}

std::pair<double, double> loglog_fit(std::span<const std::size_t> x, std::span<const double> y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0 || !(y[i] > 0.0))
            continue;
        const double lx = std::log(static_cast<double>(x[i]));
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1;
    }
    const double denom = n * sxx - sx * sx;
    if (n < 2 || denom == 0.0) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        return {nan, nan};
    }
    const double slope = (n * sxy - sx * sy) / denom;
    return {slope, (sy - slope * sx) / n};
}

ConvergenceReport convergence_study(const SemiSupervisedDataset& dataset, const Hyperparams& hp,
                                    const KernelModel& fstar, const PointSet& probes,
                                    std::size_t repeats, const ConvergenceOptions& options) {
    if (probes.empty())
        throw InvalidInput("convergence_study: no probe points");
    if (repeats == 0)
        throw InvalidParameter("convergence_study: repeats must be positive");
    hp.validate();

    const std::vector<double> target = fstar.predict(probes);
    ConvergenceReport report;
    if (hp.iterations == 0) {
        double mean_sq = 0.0;
        for (double v : target)
            mean_sq += v * v;
        report.iterations = {0};
        report.mse_vs_fstar = {mean_sq / static_cast<double>(target.size())};
        report.mse_per_repeat.assign(repeats, report.mse_vs_fstar);
        report.fitted_slope = report.fitted_intercept = std::numeric_limits<double>::quiet_NaN();
        report.slope_defined = false;
        return report;
    }

    report.iterations = log_spaced_iterations(std::min(options.t_min, hp.iterations),
                                              hp.iterations, options.points_per_decade);
    const std::size_t m = report.iterations.size();
    std::vector<std::vector<double>> per_repeat(repeats, std::vector<double>(m, 0.0));

    parallel_for(repeats, options.threads, [&](std::size_t r) {
        Hyperparams run = hp;
        run.master_seed = derive_seed(hp.master_seed, r);
        TrainOptions topts;
        topts.probes = probes;
        topts.probe_iterations = report.iterations;
        const TrainResult trained = train(dataset, run, topts);
        std::size_t k = 0;
        for (const auto& row : trained.trace.rows) {
            if (row.probe_values.empty())
                continue;
            double sq = 0.0;
            for (std::size_t p = 0; p < probes.size(); ++p) {
                const double diff = row.probe_values[p] - target[p];
                sq += diff * diff;
            }
            per_repeat[r][k++] = sq / static_cast<double>(probes.size());
        }
    });

    report.mse_per_repeat = std::move(per_repeat);
    return first_repeats(report, repeats);
}

ConvergenceReport first_repeats(const ConvergenceReport& report, std::size_t repeats) {
    if (repeats == 0 || repeats > report.mse_per_repeat.size())
        throw InvalidParameter("first_repeats: need 1 <= repeats <= " +
                               std::to_string(report.mse_per_repeat.size()));
    ConvergenceReport out;
    out.iterations = report.iterations;
    out.mse_per_repeat.assign(report.mse_per_repeat.begin(),
                              report.mse_per_repeat.begin() + static_cast<std::ptrdiff_t>(repeats));
    const std::size_t m = out.iterations.size();
    out.mse_vs_fstar.assign(m, 0.0);
    for (const auto& curve : out.mse_per_repeat)
        for (std::size_t k = 0; k < m; ++k)
            out.mse_vs_fstar[k] += curve[k];
    for (double& v : out.mse_vs_fstar)
        v /= static_cast<double>(repeats);

    const auto [slope, intercept] = loglog_fit(out.iterations, out.mse_vs_fstar);
    out.fitted_slope = slope;
    out.fitted_intercept = intercept;
    out.slope_defined = std::isfinite(slope);
    return out;
}

} // namespace qsgauc
