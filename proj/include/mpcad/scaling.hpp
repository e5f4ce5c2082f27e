#pragma once

#include <cmath>
#include <stdexcept>

namespace mpcad {

// Compound scaling of network depth / width / input resolution from a single
// exponent. The base constants are tied by the budget constraint
// alpha * beta^2 * gamma^2 ~ 2 (doubling FLOPs per exponent step).
struct ScalingParams {
    double mu = 1.0;
    double alpha = 1.2;
    double beta = 1.1;
    double gamma = 1.15;
    double tol = 0.1;
};

struct ScalingResult {
    double depth = 1.0;       // alpha^mu
    double width = 1.0;       // beta^mu
    double resolution = 1.0;  // gamma^mu
    double constraint = 0.0;  // alpha * beta^2 * gamma^2
    bool within_tol = true;   // |constraint - 2| <= tol
};

// Reference coefficients for the B4 configuration of the scaled backbone
// family: width, depth, input resolution, dropout.
inline constexpr double kB4WidthCoeff = 1.4;
inline constexpr double kB4DepthCoeff = 1.8;
inline constexpr int kB4Resolution = 380;
inline constexpr double kB4Dropout = 0.4;

inline ScalingResult compound_scaling(const ScalingParams& p) {
    if (p.alpha < 1 || p.beta < 1 || p.gamma < 1)
        throw std::invalid_argument("scaling constants must be >= 1");
    ScalingResult r;
    r.depth = std::pow(p.alpha, p.mu);
    r.width = std::pow(p.beta, p.mu);
    r.resolution = std::pow(p.gamma, p.mu);
    r.constraint = p.alpha * p.beta * p.beta * p.gamma * p.gamma;
    r.within_tol = std::fabs(r.constraint - 2.0) <= p.tol;
    return r;
}

}  // namespace mpcad
