#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qsgauc/data.hpp"
#include "qsgauc/error.hpp"
#include "qsgauc/loss.hpp"
#include "qsgauc/model.hpp"
#include "qsgauc/random.hpp"
#include "qsgauc/rff.hpp"

namespace qsgauc {

/// True when theta * lambda lies in (1, 2) or is a positive integer, the
/// step-size regime with the 1/t coefficient bounds.
bool schedule_in_regime(double theta_lambda) noexcept;

struct Hyperparams {
    double gamma = 0.5;    ///< weight of the PN risk against the PU + NU risks
    double lambda = 1.0;   ///< RKHS regularization
    double theta = 1.5;    ///< step size eta_t = theta / t
    double sigma = 1.0;    ///< Gaussian kernel width, k = exp(-sigma |x - x'|^2)
    std::size_t feature_count = 256;
    std::size_t iterations = 1000;
    std::size_t batch_p = 16;
    std::size_t batch_n = 16;
    std::size_t batch_u = 16;
    std::uint64_t master_seed = 0;
    bool unsafe_schedule = false;  ///< skip the theta * lambda regime check

    /// Throws InvalidParameter naming the first offending field.
    void validate() const;
};

/// One draw from each pool. Views into the dataset it was sampled from.
struct Triplet {
    std::span<const double> positive;
    std::span<const double> negative;
    std::span<const double> unlabeled;
};

/// f_t at the three points of a triplet.
struct TripletValues {
    double positive = 0.0;
    double negative = 0.0;
    double unlabeled = 0.0;
};

/// Feature vectors (length 2D) of the three points under one frequency block.
struct TripletFeatures {
    std::span<const double> positive;
    std::span<const double> negative;
    std::span<const double> unlabeled;
};

/// theta / t. Throws InvalidParameter for t == 0.
double step_size(std::uint64_t t, double theta);

/// Uniform independent draws with replacement from each pool.
Triplet sample_triplet(const SemiSupervisedDataset& dataset, RandomStream& stream);

/// Mean over the batch of
///   gamma (l1' phi(p) + l2' phi(n)) + (1 - gamma)(l3' phi(p) + l4' phi(u) + l5' phi(u) + l6' phi(n))
/// with (l1', l2') = grads(f(p), f(n)), (l3', l4') = grads(f(p), f(u)),
/// (l5', l6') = grads(f(u), f(n)).
std::vector<double> gradient_direction(std::span<const TripletValues> values,
                                       std::span<const TripletFeatures> features, double gamma,
                                       const PairwiseLoss& loss);

/// -eta_t * gradient_direction(...) with the square loss.
std::vector<double> gradient_coefficient(std::span<const TripletValues> values,
                                         std::span<const TripletFeatures> features, double gamma,
                                         double eta_t);

/// Multiplies every existing alpha by (1 - eta_t * lambda), eta_t being the
/// current iteration's step size.
void decay_history(CoefficientHistory& history, double eta_t, double lambda);

/// How the trainer evaluates f_t at sampled points.
enum class EvalStrategy {
    /// Cache <direction_i, phi_i(x)> per pool point and extend it lazily.
    /// Cost per visit is O(t) plus the feature work missed since the last visit.
    PointCache,
    /// Re-evaluate the full expansion at every visit, as predict does:
    /// O(t D) per point, independent of pool sizes.
    Replay,
};

enum class Pool { Positive, Negative, Unlabeled };

struct TrainOptions {
    EvalStrategy strategy = EvalStrategy::PointCache;
    const PairwiseLoss* loss = nullptr;  ///< defaults to the square loss
    PointSet probes;
    /// Iterations t after which f_{t+1} is recorded at every probe (ascending).
    std::vector<std::size_t> probe_iterations;
    /// Additionally record every `probe_cadence` iterations (0 disables).
    std::size_t probe_cadence = 0;
    /// Record f_t at every sampled point (memory grows with T * batch).
    bool record_visits = false;
    /// Called after update t completes (timing hooks; must not touch the model).
    std::function<void(std::size_t)> on_iteration;
};

struct TraceRow {
    std::size_t iteration = 0;
    double eta = 0.0;
    double batch_risk = 0.0;          ///< composite PNU surrogate risk of the mini-batch under f_t
    std::vector<double> probe_values; ///< f_{t+1} at the probes; empty when not recorded
};

struct Visit {
    std::size_t iteration = 0;  ///< f_t was evaluated before update t
    Pool pool = Pool::Positive;
    std::size_t index = 0;
    double value = 0.0;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
    std::vector<Visit> visits;
    std::size_t probe_count = 0;

    /// Tab-separated: iteration, eta, batch_risk, probe_0 ... (blank when not recorded).
    void write(std::ostream& out) const;
};

struct TrainResult {
    CoefficientHistory model;
    TrainTrace trace;
};

/// Raised when an update produces a non-finite coefficient.
class TrainingDiverged : public Error {
public:
    TrainingDiverged(std::size_t iteration, double eta, std::string detail);

    std::size_t iteration() const noexcept { return iteration_; }
    double eta() const noexcept { return eta_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t iteration_;
    double eta_;
    std::string detail_;
};

/// Quadruply stochastic training loop. Each iteration t:
///   1. sample batch_p positives, batch_n negatives and batch_u unlabeled points
///   2. regenerate the frequency block for seed t
///   3. evaluate f_t at the batch points
///   4. form the gradient direction over all cross pairs of the batch
///   5. decay the history by (1 - eta_t lambda) and append the new entry with scale -eta_t
/// Deterministic given (dataset, hp). Both strategies produce bit-identical models.
TrainResult train(const SemiSupervisedDataset& dataset, const Hyperparams& hp,
                  const TrainOptions& options = {});

/// Direct computation of a_t^i = -eta_i prod_{j=i+1}^t (1 - eta_j lambda) with
/// eta_i = theta / i, compared against |a_t^i| <= theta / t and
/// sum_i |a_t^i|^2 <= theta^2 / t.
struct ScheduleReport {
    double theta = 0.0;
    double lambda = 0.0;
    std::size_t t = 0;
    std::vector<double> coefficients;  ///< a_t^1 .. a_t^t
    double max_abs = 0.0;
    double sum_sq = 0.0;
    double max_bound = 0.0;
    double sum_bound = 0.0;
    bool max_ok = false;
    bool sum_ok = false;
    bool integer_regime = false;
    std::size_t zero_prefix = 0;  ///< i <= theta lambda - 1 once t >= theta lambda (integer regime)
    bool zero_prefix_ok = true;   ///< those a_t^i are exactly 0

    bool passed() const noexcept { return max_ok && sum_ok && zero_prefix_ok; }
};

/// Throws InvalidParameter when theta * lambda is outside the regime.
ScheduleReport coefficient_schedule_check(double theta, double lambda, std::size_t t);

} // namespace qsgauc
