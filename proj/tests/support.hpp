#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "costcal/design.hpp"
#include "costcal/model.hpp"
#include "costcal/roots.hpp"
#include "costcal/value.hpp"

namespace costcal::testing {

inline ValidatedModel baseline_model() { return validate_model({0.05, 0.3, 0.1, 0.1}, {}); }

inline JumpSpec two_atoms() { return JumpSpec{{{0.5, -0.2}, {0.25, 0.4}}}; }

inline ValidatedModel jump_model() { return validate_model({0.05, 0.3, 0.1, 0.1}, two_atoms()); }

inline constexpr PolicyTargets kBaselineTargets{5.0, 10.0};

// Log-uniform x̂ in [lo, hi] and x*/x̂ in [ratio_lo, ratio_hi].
inline PolicyTargets random_targets(std::mt19937_64& g, double lo = 0.2, double hi = 10.0, double ratio_lo = 1.2,
                                    double ratio_hi = 10.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double xh = lo * std::exp(u(g) * std::log(hi / lo));
    const double ratio = ratio_lo + u(g) * (ratio_hi - ratio_lo);
    return {xh, xh * ratio};
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace costcal::testing
