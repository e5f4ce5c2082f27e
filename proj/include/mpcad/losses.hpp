#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mpcad/core.hpp"

namespace mpcad {

struct DiceResult {
    double loss = 0;
    std::vector<double> grad;  // d loss / d pred, elementwise
};

// Soft dice loss with smoothing:
//   loss = 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps)
// The gradient is analytic; training never runs here, but the gradient is
// part of the contract and is checked against finite differences.
inline DiceResult dice_loss(const std::vector<double>& pred, const std::vector<double>& target, double eps = 1.0) {
    if (pred.size() != target.size()) throw std::invalid_argument("dice: pred/target shape mismatch");
    if (!(eps > 0)) throw std::invalid_argument("dice: eps must be > 0");
    double inter = 0, psum = 0, tsum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * target[i];
        psum += pred[i];
        tsum += target[i];
    }
    double num = 2.0 * inter + eps;
    double den = psum + tsum + eps;
    DiceResult r;
    r.loss = 1.0 - num / den;
    r.grad.resize(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        r.grad[i] = -(2.0 * target[i] * den - num) / (den * den);
    return r;
}

struct BceResult {
    double loss = 0;
    double dloss_dp = 0;
};

// Binary cross-entropy on one probability; p is clamped away from {0,1}
// before the logs so the loss stays finite.
inline BceResult bce_loss(double p, int y, double eps = 1e-7) {
    if (y != 0 && y != 1) throw std::invalid_argument("bce: label must be 0 or 1");
    double pc = clamp(p, eps, 1.0 - eps);
    BceResult r;
    r.loss = -(y * std::log(pc) + (1 - y) * std::log(1.0 - pc));
    r.dloss_dp = -(y / pc - (1 - y) / (1.0 - pc));
    return r;
}

}  // namespace mpcad
