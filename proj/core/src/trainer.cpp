#include "qsgauc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "qsgauc/table.hpp"

namespace qsgauc {

bool schedule_in_regime(double theta_lambda) noexcept {
    if (!std::isfinite(theta_lambda))
        return false;
    if (theta_lambda > 1.0 && theta_lambda < 2.0)
        return true;
    const double nearest = std::round(theta_lambda);
    return nearest >= 1.0 && std::abs(theta_lambda - nearest) <= 1e-9 * nearest;
}

void Hyperparams::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw InvalidParameter("gamma must lie in [0, 1]");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidParameter("lambda must be positive and finite");
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw InvalidParameter("theta must be positive and finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw InvalidParameter("sigma must be positive and finite");
    if (feature_count == 0)
        throw InvalidParameter("feature_count must be at least 1");
    if (batch_p == 0 || batch_n == 0 || batch_u == 0)
        throw InvalidParameter("batch sizes must be at least 1");
    if (!unsafe_schedule && !schedule_in_regime(theta * lambda))
        throw InvalidParameter("theta * lambda = " + format_real(theta * lambda) +
                               " is outside (1, 2) and not a positive integer; the 1/t "
                               "coefficient bounds do not apply (set unsafe_schedule to override)");
}

double step_size(std::uint64_t t, double theta) {
    if (t == 0)
        throw InvalidParameter("step_size: iterations are counted from 1");
    return theta / static_cast<double>(t);
}

Triplet sample_triplet(const SemiSupervisedDataset& dataset, RandomStream& stream) {
    if (dataset.positives.empty())
        throw EmptyPool("positive");
    if (dataset.negatives.empty())
        throw EmptyPool("negative");
    if (dataset.unlabeled.empty())
        throw EmptyPool("unlabeled");
    const auto& p = dataset.positives[stream.index(dataset.positives.size())];
    const auto& n = dataset.negatives[stream.index(dataset.negatives.size())];
    const auto& u = dataset.unlabeled[stream.index(dataset.unlabeled.size())];
    return {p, n, u};
}

namespace {

const SquarePairLoss kSquareLoss;

void accumulate(std::vector<double>& g, double weight, std::span<const double> phi) {
    for (std::size_t k = 0; k < g.size(); ++k)
        g[k] += weight * phi[k];
}

} // namespace

std::vector<double> gradient_direction(std::span<const TripletValues> values,
                                       std::span<const TripletFeatures> features, double gamma,
                                       const PairwiseLoss& loss) {
    if (values.empty())
        throw InvalidInput("gradient_direction: empty batch");
    if (values.size() != features.size())
        throw InvalidInput("gradient_direction: values and features differ in length");
    const std::size_t width = features.front().positive.size();
    const double inv_m = 1.0 / static_cast<double>(values.size());
    std::vector<double> g(width, 0.0);
    for (std::size_t b = 0; b < values.size(); ++b) {
        const auto& f = values[b];
        const auto& phi = features[b];
        if (phi.positive.size() != width || phi.negative.size() != width ||
            phi.unlabeled.size() != width)
            throw InvalidInput("gradient_direction: feature vectors differ in length");
        const PairGrads pn = loss.grads(f.positive, f.negative);
        const PairGrads pu = loss.grads(f.positive, f.unlabeled);
        const PairGrads un = loss.grads(f.unlabeled, f.negative);
        const double w_p = (gamma * pn.du + (1.0 - gamma) * pu.du) * inv_m;
        const double w_n = (gamma * pn.dv + (1.0 - gamma) * un.dv) * inv_m;
        const double w_u = ((1.0 - gamma) * (pu.dv + un.du)) * inv_m;
        accumulate(g, w_p, phi.positive);
        accumulate(g, w_n, phi.negative);
        accumulate(g, w_u, phi.unlabeled);
    }
    return g;
}

std::vector<double> gradient_coefficient(std::span<const TripletValues> values,
                                         std::span<const TripletFeatures> features, double gamma,
                                         double eta_t) {
    std::vector<double> alpha = gradient_direction(values, features, gamma, kSquareLoss);
    for (double& a : alpha)
        a *= -eta_t;
    return alpha;
}

void decay_history(CoefficientHistory& history, double eta_t, double lambda) {
    history.decay(1.0 - eta_t * lambda);
}

void TrainTrace::write(std::ostream& out) const {
    out << "iteration\teta\tbatch_risk";
    for (std::size_t p = 0; p < probe_count; ++p)
        out << "\tprobe_" << p;
    out << '\n';
    for (const auto& row : rows) {
        out << row.iteration << '\t' << format_real(row.eta) << '\t' << format_real(row.batch_risk);
        for (std::size_t p = 0; p < probe_count; ++p) {
            out << '\t';
            if (!row.probe_values.empty())
                out << format_real(row.probe_values[p]);
        }
        out << '\n';
    }
}

TrainingDiverged::TrainingDiverged(std::size_t iteration, double eta, std::string detail)
    : Error(ErrorCode::NumericalError,
            "training diverged at iteration " + std::to_string(iteration) +
                " (eta = " + format_real(eta) + "): " + detail),
      iteration_(iteration), eta_(eta), detail_(std::move(detail)) {}

namespace {

// Evaluates f_t = sum_i scale_i <direction_i, phi_i(x)> for the model under
// construction. Both strategies perform the same floating-point operations in
// the same order as predict(), so all three agree bit for bit.
class Evaluator {
public:
    Evaluator(const CoefficientHistory& model, const std::vector<FrequencyBlock>& blocks,
              EvalStrategy strategy, const SemiSupervisedDataset& ds, std::size_t n_probes)
        : model_(model), blocks_(blocks), strategy_(strategy) {
        if (strategy_ == EvalStrategy::PointCache) {
            caches_[0].resize(ds.positives.size());
            caches_[1].resize(ds.negatives.size());
            caches_[2].resize(ds.unlabeled.size());
        }
        probe_cache_.resize(n_probes);
    }

    double value(Pool pool, std::size_t index, std::span<const double> x) {
        if (strategy_ == EvalStrategy::Replay)
            return replay(x);
        return cached(caches_[static_cast<int>(pool)][index], x);
    }

    double probe(std::size_t index, std::span<const double> x) {
        return cached(probe_cache_[index], x);
    }

private:
    double cached(std::vector<double>& dots, std::span<const double> x) {
        const std::size_t t = model_.size();
        for (std::size_t i = dots.size() + 1; i <= t; ++i)
            dots.push_back(feature_dot(model_.direction(i), blocks_[i - 1], x));
        const auto scales = model_.scales();
        double f = 0.0;
        for (std::size_t i = 0; i < t; ++i)
            f += scales[i] * dots[i];
        return f;
    }

    double replay(std::span<const double> x) const {
        const auto scales = model_.scales();
        double f = 0.0;
        for (std::size_t i = 1; i <= model_.size(); ++i)
            f += scales[i - 1] * feature_dot(model_.direction(i), blocks_[i - 1], x);
        return f;
    }

    const CoefficientHistory& model_;
    const std::vector<FrequencyBlock>& blocks_;
    EvalStrategy strategy_;
    std::vector<std::vector<double>> caches_[3];
    std::vector<std::vector<double>> probe_cache_;
};

struct BatchPoint {
    Pool pool;
    std::size_t index;
    std::span<const double> x;
};

std::vector<std::size_t> probe_schedule(const TrainOptions& options, std::size_t iterations) {
    std::vector<std::size_t> at = options.probe_iterations;
    if (options.probe_cadence > 0)
        for (std::size_t t = options.probe_cadence; t <= iterations; t += options.probe_cadence)
            at.push_back(t);
    std::sort(at.begin(), at.end());
    at.erase(std::unique(at.begin(), at.end()), at.end());
    return at;
}

} // namespace

TrainResult train(const SemiSupervisedDataset& dataset, const Hyperparams& hp,
                  const TrainOptions& options) {
    hp.validate();
    dataset.validate();
    if (dataset.positives.empty())
        throw EmptyPool("positive");
    if (dataset.negatives.empty())
        throw EmptyPool("negative");
    const bool use_unlabeled = hp.gamma < 1.0;
    if (use_unlabeled && dataset.unlabeled.empty())
        throw EmptyPool("unlabeled");
    for (const auto& probe : options.probes)
        if (probe.size() != dataset.dim)
            throw InvalidInput("probe dimension " + std::to_string(probe.size()) +
                               " does not match dataset dimension " + std::to_string(dataset.dim));

    const PairwiseLoss& loss = options.loss ? *options.loss : kSquareLoss;
    TrainResult result{CoefficientHistory(dataset.dim, hp.feature_count, hp.sigma, hp.master_seed),
                       TrainTrace{}};
    CoefficientHistory& model = result.model;
    TrainTrace& trace = result.trace;
    trace.probe_count = options.probes.size();
    trace.rows.reserve(hp.iterations);

    const std::vector<std::size_t> probe_at = probe_schedule(options, hp.iterations);
    auto next_probe = probe_at.begin();

    std::vector<FrequencyBlock> blocks;
    blocks.reserve(hp.iterations);
    Evaluator evaluator(model, blocks, options.strategy, dataset, options.probes.size());
    RandomStream sampler(sampling_seed(hp.master_seed));

    const std::size_t bp = hp.batch_p;
    const std::size_t bn = hp.batch_n;
    const std::size_t bu = use_unlabeled ? hp.batch_u : 0;
    const std::size_t width = 2 * hp.feature_count;
    std::vector<BatchPoint> batch;
    std::vector<double> fvals;
    std::vector<double> weights;
    std::vector<double> phi(width);
    std::vector<double> direction(width);

    for (std::size_t t = 1; t <= hp.iterations; ++t) {
        const double eta = step_size(t, hp.theta);

        batch.clear();
        for (std::size_t k = 0; k < bp; ++k) {
            const std::size_t i = sampler.index(dataset.positives.size());
            batch.push_back({Pool::Positive, i, dataset.positives[i]});
        }
        for (std::size_t k = 0; k < bn; ++k) {
            const std::size_t i = sampler.index(dataset.negatives.size());
            batch.push_back({Pool::Negative, i, dataset.negatives[i]});
        }
        for (std::size_t k = 0; k < bu; ++k) {
            const std::size_t i = sampler.index(dataset.unlabeled.size());
            batch.push_back({Pool::Unlabeled, i, dataset.unlabeled[i]});
        }

        blocks.push_back(sample_frequencies(feature_seed(hp.master_seed, t), dataset.dim,
                                            hp.feature_count, hp.sigma));

        fvals.resize(batch.size());
        for (std::size_t q = 0; q < batch.size(); ++q) {
            fvals[q] = evaluator.value(batch[q].pool, batch[q].index, batch[q].x);
            if (!std::isfinite(fvals[q]))
                throw TrainingDiverged(t, eta, "f_t is non-finite at a sampled point");
            if (options.record_visits)
                trace.visits.push_back({t, batch[q].pool, batch[q].index, fvals[q]});
        }

        // Loss-derivative weight of every batch point, averaged over all
        // cross pairs: PN over bp*bn pairs, PU over bp*bu, UN over bu*bn.
        weights.assign(batch.size(), 0.0);
        const double* fp = fvals.data();
        const double* fn = fp + bp;
        const double* fu = fn + bn;
        double* wp = weights.data();
        double* wn = wp + bp;
        double* wu = wn + bn;
        double risk_pn = 0.0, risk_pu = 0.0, risk_un = 0.0;
        const double c_pn = hp.gamma / static_cast<double>(bp * bn);
        for (std::size_t i = 0; i < bp; ++i)
            for (std::size_t j = 0; j < bn; ++j) {
                const PairGrads g = loss.grads(fp[i], fn[j]);
                wp[i] += c_pn * g.du;
                wn[j] += c_pn * g.dv;
                risk_pn += loss.value(fp[i], fn[j]);
            }
        risk_pn /= static_cast<double>(bp * bn);
        double batch_risk = hp.gamma * risk_pn;
        if (use_unlabeled) {
            const double c_pu = (1.0 - hp.gamma) / static_cast<double>(bp * bu);
            const double c_un = (1.0 - hp.gamma) / static_cast<double>(bu * bn);
            for (std::size_t i = 0; i < bp; ++i)
                for (std::size_t k = 0; k < bu; ++k) {
                    const PairGrads g = loss.grads(fp[i], fu[k]);
                    wp[i] += c_pu * g.du;
                    wu[k] += c_pu * g.dv;
                    risk_pu += loss.value(fp[i], fu[k]);
                }
            for (std::size_t k = 0; k < bu; ++k)
                for (std::size_t j = 0; j < bn; ++j) {
                    const PairGrads g = loss.grads(fu[k], fn[j]);
                    wu[k] += c_un * g.du;
                    wn[j] += c_un * g.dv;
                    risk_un += loss.value(fu[k], fn[j]);
                }
            risk_pu /= static_cast<double>(bp * bu);
            risk_un /= static_cast<double>(bu * bn);
            batch_risk += (1.0 - hp.gamma) * (risk_pu + risk_un - 0.5);
        }

        std::fill(direction.begin(), direction.end(), 0.0);
        const FrequencyBlock& block = blocks.back();
        for (std::size_t q = 0; q < batch.size(); ++q) {
            if (weights[q] == 0.0)
                continue;
            feature_map_into(batch[q].x, block, phi);
            accumulate(direction, weights[q], phi);
        }
        for (std::size_t k = 0; k < width; ++k)
            if (!std::isfinite(-eta * direction[k]))
                throw TrainingDiverged(t, eta,
                                       "alpha[" + std::to_string(k) + "] = " +
                                           format_real(-eta * direction[k]));

        decay_history(model, eta, hp.lambda);
        model.append(direction, -eta);

        TraceRow row{t, eta, batch_risk, {}};
        if (next_probe != probe_at.end() && *next_probe == t) {
            row.probe_values.resize(options.probes.size());
            for (std::size_t p = 0; p < options.probes.size(); ++p)
                row.probe_values[p] = evaluator.probe(p, options.probes[p]);
            ++next_probe;
        }
        trace.rows.push_back(std::move(row));
        if (options.on_iteration)
            options.on_iteration(t);
    }
    return result;
}

ScheduleReport coefficient_schedule_check(double theta, double lambda, std::size_t t) {
    if (!(theta > 0.0) || !(lambda > 0.0))
        throw InvalidParameter("coefficient_schedule_check: theta and lambda must be positive");
    if (t == 0)
        throw InvalidParameter("coefficient_schedule_check: t must be at least 1");
    const double product = theta * lambda;
    if (!schedule_in_regime(product))
        throw InvalidParameter("theta * lambda = " + format_real(product) +
                               " is outside the admissible step-size regime: it must lie in "
                               "the open interval (1, 2) or be a positive integer");

    ScheduleReport report;
    report.theta = theta;
    report.lambda = lambda;
    report.t = t;
    report.coefficients.resize(t);
    // Suffix product P_i = prod_{j=i+1}^t (1 - eta_j lambda), built from i = t down.
    double suffix = 1.0;
    for (std::size_t i = t; i >= 1; --i) {
        report.coefficients[i - 1] = -step_size(i, theta) * suffix;
        suffix *= 1.0 - step_size(i, theta) * lambda;
    }
    for (double a : report.coefficients) {
        report.max_abs = std::max(report.max_abs, std::abs(a));
        report.sum_sq += a * a;
    }
    const double td = static_cast<double>(t);
    report.max_bound = theta / td;
    report.sum_bound = theta * theta / td;
    constexpr double slack = 1.0 + 1e-12;  // rounding in the running product
    report.max_ok = report.max_abs <= report.max_bound * slack;
    report.sum_ok = report.sum_sq <= report.sum_bound * slack;
    report.integer_regime = !(product > 1.0 && product < 2.0);
    if (report.integer_regime) {
        const auto k = static_cast<std::size_t>(std::llround(product));
        // a_t^i for i < k carries the factor (1 - eta_k lambda) = 0 once t >= k.
        report.zero_prefix = t >= k ? k - 1 : 0;
        for (std::size_t i = 1; i <= report.zero_prefix; ++i)
            if (report.coefficients[i - 1] != 0.0)
                report.zero_prefix_ok = false;
    }
    return report;
}

} // namespace qsgauc
