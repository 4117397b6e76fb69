#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qsgauc/data.hpp"
#include "qsgauc/loss.hpp"
#include "qsgauc/rff.hpp"
#include "qsgauc/trainer.hpp"

namespace qsgauc {

/// Empirical pairwise risks. r_pu / r_nu are NaN when no unlabeled scores
/// were supplied (allowed only for gamma = 1).
struct RiskReport {
    double r_pn = 0.0;
    double r_pu = 0.0;
    double r_nu = 0.0;
    double r_pnu = 0.0;
    std::string loss_name;
    std::array<std::size_t, 3> counts{};  ///< n_p, n_n, n_u

    static std::vector<std::string> header();
    std::vector<std::string> row() const;
};

/// Means over all ordered (p, n), (p, u) and (u, n) pairs, and
/// r_pnu = (1 - gamma)(r_pu + r_nu - 1/2) + gamma r_pn.
RiskReport empirical_risks(std::span<const double> scores_p, std::span<const double> scores_n,
                           std::span<const double> scores_u, double gamma,
                           const PairwiseLoss& loss);

/// f evaluated at every dataset point, pool by pool.
struct PoolValues {
    std::vector<double> positives;
    std::vector<double> negatives;
    std::vector<double> unlabeled;
};

/// Data part of the functional gradient of the objective (no lambda f term),
/// evaluated at `probe` with the exact kernel:
///   gamma E_{p,n}[l1' k(p, .) + l2' k(n, .)]
///   + (1 - gamma)(E_{p,u}[l3' k(p, .) + l4' k(u, .)] + E_{u,n}[l5' k(u, .) + l6' k(n, .)])
/// with full double averages over the pools.
double exact_functional_gradient(const SemiSupervisedDataset& dataset, const PoolValues& f_values,
                                 double gamma, std::span<const double> probe, double sigma,
                                 const PairwiseLoss& loss);

/// Stochastic gradient of one triplet at `probe`, exact kernel, no features.
double triplet_gradient_exact(const Triplet& triplet, const TripletValues& f_values, double gamma,
                              std::span<const double> probe, double sigma,
                              const PairwiseLoss& loss);

/// f(x) = sum_k beta_k k(support_k, x).
struct KernelModel {
    PointSet support;
    std::vector<double> beta;
    double sigma = 1.0;

    double predict(std::span<const double> x) const;
    std::vector<double> predict(const PointSet& xs) const;
    PoolValues predict(const SemiSupervisedDataset& ds) const;
};

/// Square-loss objective over f(x) = <w, phi(x)> for one feature block:
///   R_PNU(Phi w) + lambda / 2 |w|^2
double fixed_feature_objective(const SemiSupervisedDataset& dataset, const FrequencyBlock& block,
                               double gamma, double lambda, std::span<const double> w);

/// Gradient of fixed_feature_objective with respect to w.
std::vector<double> fixed_feature_gradient(const SemiSupervisedDataset& dataset,
                                           const FrequencyBlock& block, double gamma,
                                           double lambda, std::span<const double> w);

/// Exact minimizer of fixed_feature_objective: solves
///   (2 Phi' M Phi + lambda I) w = 2 Phi' b
/// where M and b collect the pair structure of the three risks.
std::vector<double> solve_fixed_feature(const SemiSupervisedDataset& dataset,
                                        const FrequencyBlock& block, double gamma, double lambda);

inline constexpr std::size_t kDefaultExactCap = 2000;

/// Exact minimizer of the square-loss objective over the span of k(x_i, .)
/// for all dataset points (positives, negatives, unlabeled in that order).
/// Solves the n x n system (2 M K + lambda I) beta = 2 b. Refuses with
/// CapacityExceeded when n > cap.
KernelModel solve_kernel_closed_form(const SemiSupervisedDataset& dataset, double gamma,
                                     double lambda, double sigma,
                                     std::size_t cap = kDefaultExactCap);

} // namespace qsgauc
