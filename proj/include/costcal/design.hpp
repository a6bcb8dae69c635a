#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "costcal/model.hpp"
#include "costcal/roots.hpp"
#include "costcal/value.hpp"

namespace costcal {

/// Case II: choose both λ and κ so that the agent's optimal policy is
/// "purchase at x*, land at x̂". Throws DegenerateTargets, InvalidTargets,
/// SingularSystem or InfeasibleLambda.
CostParams design_case2(const PolicyTargets& targets, const RootPair& roots, double b);

/// Case I: λ is exogenous; returns the κ that makes (x̂, x*) optimal.
double design_case1(const PolicyTargets& targets, double lambda, const RootPair& roots, double b);

/// Full φ coefficients behind a Case II calibration (a1 = a2 = a).
ValueCoeffs case2_value_coeffs(const PolicyTargets& targets, const RootPair& roots, const LogCoeffs& log_coeffs);

/// Full φ coefficients behind a Case I calibration at the given λ.
ValueCoeffs case1_value_coeffs(const PolicyTargets& targets, double lambda, const RootPair& roots,
                               const LogCoeffs& log_coeffs);

struct TargetShift {
    double h1 = 0.0;        // added to the current threshold x*
    double h_minus1 = 0.0;  // added to the current post-purchase level x̂
};

/// Moves the agent's policy from the one induced by costs0 to the shifted one.
/// `current` seeds the forward solve when the current policy is known; without
/// it the forward problem is solved by multistart and may be ambiguous.
CostParams retarget(const CostParams& costs0, const TargetShift& shifts, const RootPair& roots, double b,
                    const std::optional<PolicyTargets>& current = std::nullopt);

/// Costs under which this agent copies the optimal policy of an external
/// problem with boundary x*_2 and post-purchase level x̂_2. Same map as Case II.
inline CostParams equivalence_transfer(const PolicyTargets& external_policy, const RootPair& roots, double b) {
    return design_case2(external_policy, roots, b);
}

enum class Warning { PurchaseSizeNonpositive, PostStateNonpositive, ClosureMismatch };

std::string_view to_string(Warning w);

struct FeasibilityReport {
    double z_hat = 0.0;  // (x* - x̂ - κ)/(1+λ)
    std::vector<Warning> warnings;
};

/// Never throws; reports the purchase size implied by the costs.
FeasibilityReport feasibility_report(const PolicyTargets& targets, const CostParams& costs);

}  // namespace costcal
