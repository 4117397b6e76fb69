#include "qsgauc/oracle.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Dense>

#include "qsgauc/error.hpp"
#include "qsgauc/table.hpp"

namespace qsgauc {

std::vector<std::string> RiskReport::header() {
    return {"loss", "n_p", "n_n", "n_u", "r_pn", "r_pu", "r_nu", "r_pnu"};
}

std::vector<std::string> RiskReport::row() const {
    return {loss_name,          std::to_string(counts[0]), std::to_string(counts[1]),
            std::to_string(counts[2]), format_real(r_pn), format_real(r_pu),
            format_real(r_nu), format_real(r_pnu)};
}

namespace {

double pair_mean(std::span<const double> first, std::span<const double> second,
                 const PairwiseLoss& loss) {
    double sum = 0.0;
    for (double u : first)
        for (double v : second)
            sum += loss.value(u, v);
    return sum / (static_cast<double>(first.size()) * static_cast<double>(second.size()));
}

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw InvalidParameter("gamma must lie in [0, 1]");
}

} // namespace

RiskReport empirical_risks(std::span<const double> scores_p, std::span<const double> scores_n,
                           std::span<const double> scores_u, double gamma,
                           const PairwiseLoss& loss) {
    check_gamma(gamma);
    if (scores_p.empty())
        throw EmptyPool("positive");
    if (scores_n.empty())
        throw EmptyPool("negative");
    if (scores_u.empty() && gamma < 1.0)
        throw EmptyPool("unlabeled");

    RiskReport report;
    report.loss_name = std::string(loss.name());
    report.counts = {scores_p.size(), scores_n.size(), scores_u.size()};
    report.r_pn = pair_mean(scores_p, scores_n, loss);
    if (scores_u.empty()) {
        report.r_pu = report.r_nu = std::numeric_limits<double>::quiet_NaN();
        report.r_pnu = report.r_pn;
        return report;
    }
    report.r_pu = pair_mean(scores_p, scores_u, loss);
    report.r_nu = pair_mean(scores_u, scores_n, loss);
    report.r_pnu = (1.0 - gamma) * (report.r_pu + report.r_nu - 0.5) + gamma * report.r_pn;
    return report;
}

namespace {

// Per-point derivative weights of the pairwise data term:
//   gradient = sum_q weight_q k(x_q, .)
// with pair averages taken over complete pools.
PoolValues pair_weights(const PoolValues& f, double gamma, const PairwiseLoss& loss) {
    const std::size_t np = f.positives.size();
    const std::size_t nn = f.negatives.size();
    const std::size_t nu = f.unlabeled.size();
    PoolValues w{std::vector<double>(np, 0.0), std::vector<double>(nn, 0.0),
                 std::vector<double>(nu, 0.0)};
    const double c_pn = gamma / (static_cast<double>(np) * static_cast<double>(nn));
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < nn; ++j) {
            const PairGrads g = loss.grads(f.positives[i], f.negatives[j]);
            w.positives[i] += c_pn * g.du;
            w.negatives[j] += c_pn * g.dv;
        }
    if (gamma < 1.0) {
        const double c_pu = (1.0 - gamma) / (static_cast<double>(np) * static_cast<double>(nu));
        const double c_un = (1.0 - gamma) / (static_cast<double>(nu) * static_cast<double>(nn));
        for (std::size_t i = 0; i < np; ++i)
            for (std::size_t k = 0; k < nu; ++k) {
                const PairGrads g = loss.grads(f.positives[i], f.unlabeled[k]);
                w.positives[i] += c_pu * g.du;
                w.unlabeled[k] += c_pu * g.dv;
            }
        for (std::size_t k = 0; k < nu; ++k)
            for (std::size_t j = 0; j < nn; ++j) {
                const PairGrads g = loss.grads(f.unlabeled[k], f.negatives[j]);
                w.unlabeled[k] += c_un * g.du;
                w.negatives[j] += c_un * g.dv;
            }
    }
    return w;
}

void check_pools(const SemiSupervisedDataset& ds, double gamma) {
    check_gamma(gamma);
    if (ds.positives.empty())
        throw EmptyPool("positive");
    if (ds.negatives.empty())
        throw EmptyPool("negative");
    if (gamma < 1.0 && ds.unlabeled.empty())
        throw EmptyPool("unlabeled");
}

} // namespace

double exact_functional_gradient(const SemiSupervisedDataset& dataset, const PoolValues& f_values,
                                 double gamma, std::span<const double> probe, double sigma,
                                 const PairwiseLoss& loss) {
    check_pools(dataset, gamma);
    if (probe.size() != dataset.dim)
        throw InvalidInput("exact_functional_gradient: probe has dimension " +
                           std::to_string(probe.size()) + ", dataset has " +
                           std::to_string(dataset.dim));
    if (f_values.positives.size() != dataset.positives.size() ||
        f_values.negatives.size() != dataset.negatives.size() ||
        f_values.unlabeled.size() != dataset.unlabeled.size())
        throw InvalidInput("exact_functional_gradient: f_values do not cover the dataset");

    PoolValues f = f_values;
    if (gamma == 1.0)
        f.unlabeled.clear();
    const PoolValues w = pair_weights(f, gamma, loss);
    double grad = 0.0;
    for (std::size_t i = 0; i < w.positives.size(); ++i)
        grad += w.positives[i] * kernel_exact(dataset.positives[i], probe, sigma);
    for (std::size_t j = 0; j < w.negatives.size(); ++j)
        grad += w.negatives[j] * kernel_exact(dataset.negatives[j], probe, sigma);
    for (std::size_t k = 0; k < w.unlabeled.size(); ++k)
        grad += w.unlabeled[k] * kernel_exact(dataset.unlabeled[k], probe, sigma);
    return grad;
}

double triplet_gradient_exact(const Triplet& triplet, const TripletValues& f, double gamma,
                              std::span<const double> probe, double sigma,
                              const PairwiseLoss& loss) {
    const PairGrads pn = loss.grads(f.positive, f.negative);
    const PairGrads pu = loss.grads(f.positive, f.unlabeled);
    const PairGrads un = loss.grads(f.unlabeled, f.negative);
    const double kp = kernel_exact(triplet.positive, probe, sigma);
    const double kn = kernel_exact(triplet.negative, probe, sigma);
    const double ku = kernel_exact(triplet.unlabeled, probe, sigma);
    return gamma * (pn.du * kp + pn.dv * kn) +
           (1.0 - gamma) * (pu.du * kp + pu.dv * ku + un.du * ku + un.dv * kn);
}

double KernelModel::predict(std::span<const double> x) const {
    double f = 0.0;
    for (std::size_t k = 0; k < support.size(); ++k)
        f += beta[k] * kernel_exact(support[k], x, sigma);
    return f;
}

std::vector<double> KernelModel::predict(const PointSet& xs) const {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const auto& x : xs)
        out.push_back(predict(x));
    return out;
}

PoolValues KernelModel::predict(const SemiSupervisedDataset& ds) const {
    return {predict(ds.positives), predict(ds.negatives), predict(ds.unlabeled)};
}

namespace {

// One pairwise risk term: weight * mean over (a in first, b in second) of
// (1 - s_a + s_b)^2. Groups are index ranges into the stacked point list.
struct PairTerm {
    std::size_t first_begin, first_size;
    std::size_t second_begin, second_size;
    double weight;  // includes the 1 / (|A| |B|) normalization
};

std::vector<PairTerm> pair_terms(const SemiSupervisedDataset& ds, double gamma) {
    const std::size_t np = ds.positives.size();
    const std::size_t nn = ds.negatives.size();
    const std::size_t nu = ds.unlabeled.size();
    std::vector<PairTerm> terms;
    terms.push_back({0, np, np, nn, gamma / (double(np) * double(nn))});
    if (gamma < 1.0) {
        terms.push_back({0, np, np + nn, nu, (1.0 - gamma) / (double(np) * double(nu))});
        terms.push_back({np + nn, nu, np, nn, (1.0 - gamma) / (double(nu) * double(nn))});
    }
    return terms;
}

PointSet stacked(const SemiSupervisedDataset& ds, bool with_unlabeled) {
    PointSet all = ds.positives;
    all.insert(all.end(), ds.negatives.begin(), ds.negatives.end());
    if (with_unlabeled)
        all.insert(all.end(), ds.unlabeled.begin(), ds.unlabeled.end());
    return all;
}

Eigen::MatrixXd feature_matrix(const PointSet& points, const FrequencyBlock& block) {
    const auto width = static_cast<Eigen::Index>(2 * block.count);
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(points.size()), width);
    std::vector<double> row(static_cast<std::size_t>(width));
    for (std::size_t r = 0; r < points.size(); ++r) {
        feature_map_into(points[r], block, row);
        for (Eigen::Index k = 0; k < width; ++k)
            phi(static_cast<Eigen::Index>(r), k) = row[static_cast<std::size_t>(k)];
    }
    return phi;
}

void check_block(const SemiSupervisedDataset& ds, const FrequencyBlock& block) {
    if (block.dim != ds.dim)
        throw InvalidInput("feature block dimension " + std::to_string(block.dim) +
                           " does not match dataset dimension " + std::to_string(ds.dim));
}

} // namespace

double fixed_feature_objective(const SemiSupervisedDataset& dataset, const FrequencyBlock& block,
                               double gamma, double lambda, std::span<const double> w) {
    check_pools(dataset, gamma);
    check_block(dataset, block);
    auto scores = [&](const PointSet& pool) {
        std::vector<double> s;
        s.reserve(pool.size());
        for (const auto& x : pool)
            s.push_back(feature_dot(w, block, x));
        return s;
    };
    const auto sp = scores(dataset.positives);
    const auto sn = scores(dataset.negatives);
    const auto su = gamma < 1.0 ? scores(dataset.unlabeled) : std::vector<double>{};
    const RiskReport risks = empirical_risks(sp, sn, su, gamma, SquarePairLoss{});
    double norm_sq = 0.0;
    for (double v : w)
        norm_sq += v * v;
    return risks.r_pnu + 0.5 * lambda * norm_sq;
}

std::vector<double> fixed_feature_gradient(const SemiSupervisedDataset& dataset,
                                           const FrequencyBlock& block, double gamma,
                                           double lambda, std::span<const double> w) {
    check_pools(dataset, gamma);
    check_block(dataset, block);
    PoolValues f;
    auto fill = [&](const PointSet& pool, std::vector<double>& out) {
        for (const auto& x : pool)
            out.push_back(feature_dot(w, block, x));
    };
    fill(dataset.positives, f.positives);
    fill(dataset.negatives, f.negatives);
    if (gamma < 1.0)
        fill(dataset.unlabeled, f.unlabeled);
    const PoolValues weights = pair_weights(f, gamma, SquarePairLoss{});

    std::vector<double> grad(w.begin(), w.end());
    for (double& g : grad)
        g *= lambda;
    std::vector<double> phi(2 * block.count);
    auto add = [&](const PointSet& pool, const std::vector<double>& wts) {
        for (std::size_t q = 0; q < wts.size(); ++q) {
            feature_map_into(pool[q], block, phi);
            for (std::size_t k = 0; k < phi.size(); ++k)
                grad[k] += wts[q] * phi[k];
        }
    };
    add(dataset.positives, weights.positives);
    add(dataset.negatives, weights.negatives);
    add(dataset.unlabeled, weights.unlabeled);
    return grad;
}

std::vector<double> solve_fixed_feature(const SemiSupervisedDataset& dataset,
                                        const FrequencyBlock& block, double gamma, double lambda) {
    check_pools(dataset, gamma);
    check_block(dataset, block);
    if (!(lambda > 0.0))
        throw InvalidParameter("solve_fixed_feature: lambda must be positive");

    const bool with_u = gamma < 1.0;
    const Eigen::MatrixXd phi = feature_matrix(stacked(dataset, with_u), block);
    const Eigen::Index width = phi.cols();

    // Phi' M Phi and Phi' b from per-group second moments and sums.
    Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(width, width);
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(width);
    for (const PairTerm& term : pair_terms(dataset, gamma)) {
        const auto a = phi.middleRows(static_cast<Eigen::Index>(term.first_begin),
                                      static_cast<Eigen::Index>(term.first_size));
        const auto b = phi.middleRows(static_cast<Eigen::Index>(term.second_begin),
                                      static_cast<Eigen::Index>(term.second_size));
        const Eigen::VectorXd sum_a = a.colwise().sum().transpose();
        const Eigen::VectorXd sum_b = b.colwise().sum().transpose();
        const double na = static_cast<double>(term.first_size);
        const double nb = static_cast<double>(term.second_size);
        quad += term.weight * (nb * (a.transpose() * a) + na * (b.transpose() * b) -
                               sum_a * sum_b.transpose() - sum_b * sum_a.transpose());
        lin += term.weight * (nb * sum_a - na * sum_b);
    }
    Eigen::MatrixXd system = 2.0 * quad;
    system.diagonal().array() += lambda;
    const Eigen::VectorXd rhs = 2.0 * lin;

    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        std::cerr << "warning: solve_fixed_feature: factorization failed, adding 1e-12 jitter\n";
        system.diagonal().array() += 1e-12;
        llt.compute(system);
        if (llt.info() != Eigen::Success)
            throw Error(ErrorCode::InternalError, "solve_fixed_feature: singular system");
    }
    const Eigen::VectorXd w = llt.solve(rhs);
    return std::vector<double>(w.data(), w.data() + w.size());
}

KernelModel solve_kernel_closed_form(const SemiSupervisedDataset& dataset, double gamma,
                                     double lambda, double sigma, std::size_t cap) {
    check_pools(dataset, gamma);
    if (!(lambda > 0.0))
        throw InvalidParameter("solve_kernel_closed_form: lambda must be positive");
    if (!(sigma > 0.0))
        throw InvalidParameter("solve_kernel_closed_form: sigma must be positive");
    const bool with_u = gamma < 1.0;
    const std::size_t n = dataset.positives.size() + dataset.negatives.size() +
                          (with_u ? dataset.unlabeled.size() : 0);
    if (n > cap)
        throw CapacityExceeded("solve_kernel_closed_form: " + std::to_string(n) +
                               " points exceed the exact-solver cap of " + std::to_string(cap));

    KernelModel model;
    model.sigma = sigma;
    model.support = stacked(dataset, with_u);
    const auto N = static_cast<Eigen::Index>(n);

    Eigen::MatrixXd gram(N, N);
    for (Eigen::Index r = 0; r < N; ++r) {
        gram(r, r) = 1.0;
        for (Eigen::Index c = 0; c < r; ++c) {
            const double k = kernel_exact(model.support[static_cast<std::size_t>(r)],
                                          model.support[static_cast<std::size_t>(c)], sigma);
            gram(r, c) = k;
            gram(c, r) = k;
        }
    }

    // M K assembled row block by row block: a row r in group A of a term
    // receives weight * (|B| K_r - sum_{b in B} K_b), symmetrically for B.
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(N, N);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    for (const PairTerm& term : pair_terms(dataset, gamma)) {
        const auto a0 = static_cast<Eigen::Index>(term.first_begin);
        const auto na = static_cast<Eigen::Index>(term.first_size);
        const auto b0 = static_cast<Eigen::Index>(term.second_begin);
        const auto nb = static_cast<Eigen::Index>(term.second_size);
        const Eigen::RowVectorXd sum_a = gram.middleRows(a0, na).colwise().sum();
        const Eigen::RowVectorXd sum_b = gram.middleRows(b0, nb).colwise().sum();
        for (Eigen::Index r = a0; r < a0 + na; ++r)
            system.row(r) += term.weight * (double(nb) * gram.row(r) - sum_b);
        for (Eigen::Index r = b0; r < b0 + nb; ++r)
            system.row(r) += term.weight * (double(na) * gram.row(r) - sum_a);
        rhs.segment(a0, na).array() += term.weight * double(nb);
        rhs.segment(b0, nb).array() -= term.weight * double(na);
    }
    system *= 2.0;
    system.diagonal().array() += lambda;
    rhs *= 2.0;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd beta = lu.solve(rhs);
    if (!beta.allFinite()) {
        std::cerr << "warning: solve_kernel_closed_form: solve failed, adding 1e-12 jitter\n";
        system.diagonal().array() += 1e-12;
        beta = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);
        if (!beta.allFinite())
            throw Error(ErrorCode::InternalError, "solve_kernel_closed_form: singular system");
    }
    model.beta.assign(beta.data(), beta.data() + beta.size());
    return model;
}

} // namespace qsgauc
