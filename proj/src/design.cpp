#include "costcal/design.hpp"

#include <cmath>
#include <string>

#include "costcal/solve.hpp"
#include "detail.hpp"

namespace costcal {

CostParams design_case2(const PolicyTargets& t, const RootPair& r, double b) {
    if (t.x_hat == t.x_star)
        throw Error(ErrorCode::DegenerateTargets, "design_case2: x_hat equals x_star, ln(x_hat/x_star) is zero");
    validate_targets(t);
    using detail::zpow;
    const double z = t.x_hat - t.x_star;
    const double n = r.l1 * zpow(t, r.l1 - 1.0) + r.l2 * zpow(t, r.l2 - 1.0);
    const double d = r.l1 * zpow(t, r.l1) + r.l2 * zpow(t, r.l2);
    if (!(std::abs(d) >= 1e-14) || !(std::abs(n) >= 1e-14))
        throw Error(ErrorCode::SingularSystem, "design_case2: l1 z^l1 + l2 z^l2 or its derivative analogue vanishes");
    const double g = t.x_hat * t.x_star * std::log(t.x_hat / t.x_star);

    const double lambda = t.x_hat * t.x_star * n / (b * d) - 1.0;
    if (!(lambda > -1.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::InfeasibleLambda,
                    "design_case2: computed lambda=" + std::to_string(lambda) + " is not > -1");
    // The G term enters with a plus sign; this is what makes the value-matching
    // condition hold with the lambda above.
    const double kappa = z * (zpow(t, r.l1) + zpow(t, r.l2)) / d + g * n / d - z;
    return {lambda, kappa};
}

double design_case1(const PolicyTargets& t, double lambda, const RootPair& r, double b) {
    const auto a = coeffs_case1(t, lambda, r, b);
    const double jump = a.a1 * (std::pow(t.x_star, r.l1) - std::pow(t.x_hat, r.l1)) +
                        a.a2 * (std::pow(t.x_star, r.l2) - std::pow(t.x_hat, r.l2));
    return t.x_star - t.x_hat - (1.0 + lambda) * (jump - b * std::log(t.x_hat / t.x_star));
}

ValueCoeffs case2_value_coeffs(const PolicyTargets& t, const RootPair& r, const LogCoeffs& lc) {
    const double a = coeff_case2(t, r, lc.b);
    return {a, a, lc.b, lc.c, CoeffMode::CaseII};
}

ValueCoeffs case1_value_coeffs(const PolicyTargets& t, double lambda, const RootPair& r, const LogCoeffs& lc) {
    const auto a = coeffs_case1(t, lambda, r, lc.b);
    return {a.a1, a.a2, lc.b, lc.c, CoeffMode::CaseI};
}

CostParams retarget(const CostParams& costs0, const TargetShift& s, const RootPair& roots, double b,
                    const std::optional<PolicyTargets>& current) {
    if (!std::isfinite(s.h1) || !std::isfinite(s.h_minus1))
        throw Error(ErrorCode::InvalidShift, "retarget: shifts h1 and h_minus1 must be finite");
    const auto now = forward_solve(costs0, roots, b, current);
    const PolicyTargets next{now.targets.x_hat + s.h_minus1, now.targets.x_star + s.h1};
    if (!(next.x_hat > 0.0) || !(next.x_hat < next.x_star))
        throw Error(ErrorCode::InvalidShift, "retarget: shifted targets (x_hat=" + std::to_string(next.x_hat) +
                                                 ", x_star=" + std::to_string(next.x_star) +
                                                 ") violate 0 < x_hat < x_star");
    return design_case2(next, roots, b);
}

std::string_view to_string(Warning w) {
    switch (w) {
        case Warning::PurchaseSizeNonpositive: return "PurchaseSizeNonpositive";
        case Warning::PostStateNonpositive: return "PostStateNonpositive";
        case Warning::ClosureMismatch: return "ClosureMismatch";
    }
    return "Unknown";
}

FeasibilityReport feasibility_report(const PolicyTargets& t, const CostParams& c) {
    FeasibilityReport rep;
    rep.z_hat = (t.x_star - t.x_hat - c.kappa) / (1.0 + c.lambda);
    if (!(rep.z_hat > 0.0)) rep.warnings.push_back(Warning::PurchaseSizeNonpositive);
    if (!(t.x_hat > 0.0)) rep.warnings.push_back(Warning::PostStateNonpositive);
    return rep;
}

}  // namespace costcal
