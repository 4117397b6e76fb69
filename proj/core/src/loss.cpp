#include "qsgauc/loss.hpp"

namespace qsgauc {

double pair_loss(double u, double v) noexcept {
    const double margin = 1.0 - u + v;
    return margin * margin;
}

PairGrads pair_loss_grads(double u, double v) noexcept {
    const double margin = 1.0 - u + v;
    return {-2.0 * margin, 2.0 * margin};
}

double zero_one_loss(double u, double v) noexcept {
    if (u > v)
        return 0.0;
    if (u < v)
        return 1.0;
    return 0.5;
}

double SquarePairLoss::value(double u, double v) const { return pair_loss(u, v); }

PairGrads SquarePairLoss::grads(double u, double v) const { return pair_loss_grads(u, v); }

double ZeroOneLoss::value(double u, double v) const { return zero_one_loss(u, v); }

PairGrads ZeroOneLoss::grads(double, double) const { return {}; }

} // namespace qsgauc
