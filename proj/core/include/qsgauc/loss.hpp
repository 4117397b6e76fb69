#pragma once

#include <string_view>

namespace qsgauc {

/// Partial derivatives of a pairwise loss l(u, v).
struct PairGrads {
    double du = 0.0;
    double dv = 0.0;
};

/// Pairwise surrogate l(u, v) where u is the score of the item that should
/// rank higher. The trainer needs value() and grads(); risk evaluation only
/// needs value().
class PairwiseLoss {
public:
    virtual ~PairwiseLoss() = default;
    virtual std::string_view name() const noexcept = 0;
    virtual double value(double u, double v) const = 0;
    virtual PairGrads grads(double u, double v) const = 0;
};

/// (1 - u + v)^2
class SquarePairLoss final : public PairwiseLoss {
public:
    std::string_view name() const noexcept override { return "square"; }
    double value(double u, double v) const override;
    PairGrads grads(double u, double v) const override;
};

/// (1 - sign(u - v)) / 2. Piecewise constant, so grads() is zero.
class ZeroOneLoss final : public PairwiseLoss {
public:
    std::string_view name() const noexcept override { return "zero_one"; }
    double value(double u, double v) const override;
    PairGrads grads(double u, double v) const override;
};

double pair_loss(double u, double v) noexcept;
PairGrads pair_loss_grads(double u, double v) noexcept;
double zero_one_loss(double u, double v) noexcept;

} // namespace qsgauc
