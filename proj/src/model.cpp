#include "costcal/model.hpp"

#include <cmath>
#include <string>

namespace costcal {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
        case ErrorCode::NonPositiveDelta: return "NonPositiveDelta";
        case ErrorCode::ZeroEpsilon: return "ZeroEpsilon";
        case ErrorCode::JumpFactorBelowMinusOne: return "JumpFactorBelowMinusOne";
        case ErrorCode::NegativeRate: return "NegativeRate";
        case ErrorCode::NonFiniteParameter: return "NonFiniteParameter";
        case ErrorCode::InvalidTargets: return "InvalidTargets";
        case ErrorCode::InvalidCosts: return "InvalidCosts";
        case ErrorCode::InvalidPolicy: return "InvalidPolicy";
        case ErrorCode::InvalidShift: return "InvalidShift";
        case ErrorCode::InvalidSimConfig: return "InvalidSimConfig";
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InfeasiblePolicy: return "InfeasiblePolicy";
        case ErrorCode::NonPositiveInitialState: return "NonPositiveInitialState";
        case ErrorCode::NonPositiveState: return "NonPositiveState";
        case ErrorCode::PositiveStepRequired: return "PositiveStepRequired";
        case ErrorCode::JumpsPresent: return "JumpsPresent";
        case ErrorCode::DegenerateTargets: return "DegenerateTargets";
        case ErrorCode::InfeasibleLambda: return "InfeasibleLambda";
        case ErrorCode::EmptyFeasibleSet: return "EmptyFeasibleSet";
        case ErrorCode::BracketNotFound: return "BracketNotFound";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::SingularSensitivity: return "SingularSensitivity";
        case ErrorCode::SingularJacobian: return "SingularJacobian";
        case ErrorCode::ForwardSolveFailed: return "ForwardSolveFailed";
        case ErrorCode::MultipleSolutions: return "MultipleSolutions";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::BracketNotFound:
        case ErrorCode::SingularSystem:
        case ErrorCode::SingularSensitivity:
        case ErrorCode::SingularJacobian:
        case ErrorCode::ForwardSolveFailed:
        case ErrorCode::MultipleSolutions:
            return ErrorCategory::Solver;
        case ErrorCode::Io:
            return ErrorCategory::Io;
        default:
            return ErrorCategory::Validation;
    }
}

namespace {

void require_finite(double v, const char* field) {
    if (!std::isfinite(v))
        throw Error(ErrorCode::NonFiniteParameter, std::string(field) + " must be finite");
}

}  // namespace

ValidatedModel validate_model(const ModelParams& params, const JumpSpec& jumps) {
    require_finite(params.gamma_drift, "model.gamma_drift");
    require_finite(params.sigma, "model.sigma");
    require_finite(params.delta, "model.delta");
    require_finite(params.epsilon, "model.epsilon");
    if (!(params.sigma > 0.0))
        throw Error(ErrorCode::NonPositiveSigma, "model.sigma must be > 0");
    if (!(params.delta > 0.0))
        throw Error(ErrorCode::NonPositiveDelta, "model.delta must be > 0");
    if (params.epsilon == 0.0)
        throw Error(ErrorCode::ZeroEpsilon, "model.epsilon must be nonzero");

    double lam = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < jumps.atoms.size(); ++i) {
        const auto& atom = jumps.atoms[i];
        const std::string where = "jumps.atoms[" + std::to_string(i) + "]";
        require_finite(atom.rate, (where + ".rate").c_str());
        require_finite(atom.factor, (where + ".factor").c_str());
        if (atom.rate < 0.0)
            throw Error(ErrorCode::NegativeRate, where + ".rate must be >= 0");
        if (!(atom.factor > -1.0))
            throw Error(ErrorCode::JumpFactorBelowMinusOne, where + ".factor must be > -1");
        lam += atom.rate;
        mean += atom.rate * atom.factor;
    }
    return ValidatedModel(params, jumps, lam, mean);
}

void validate_costs(const CostParams& costs) {
    if (!std::isfinite(costs.lambda) || !(costs.lambda > -1.0))
        throw Error(ErrorCode::InvalidCosts, "costs.lambda must be finite and > -1");
    if (!std::isfinite(costs.kappa))
        throw Error(ErrorCode::InvalidCosts, "costs.kappa must be finite");
}

void validate_targets(const PolicyTargets& t) {
    if (!std::isfinite(t.x_hat) || !std::isfinite(t.x_star))
        throw Error(ErrorCode::InvalidTargets, "targets.x_hat and targets.x_star must be finite");
    if (!(t.x_hat > 0.0))
        throw Error(ErrorCode::InvalidTargets, "targets.x_hat must be > 0");
    if (!(t.x_hat < t.x_star))
        throw Error(ErrorCode::InvalidTargets, "targets.x_hat must be < targets.x_star");
}

double purchase_size(const Policy& policy, const CostParams& costs) {
    return (policy.trigger - policy.after - costs.kappa) / (1.0 + costs.lambda);
}

void validate_policy(const Policy& policy, const CostParams& costs) {
    validate_costs(costs);
    if (!std::isfinite(policy.trigger) || !std::isfinite(policy.after) || !(policy.after > 0.0) ||
        !(policy.after < policy.trigger))
        throw Error(ErrorCode::InfeasiblePolicy,
                    "policy requires 0 < after < trigger (after=" + std::to_string(policy.after) +
                        ", trigger=" + std::to_string(policy.trigger) + ")");
    if (!std::isfinite(purchase_size(policy, costs)))
        throw Error(ErrorCode::InfeasiblePolicy, "policy purchase size is not finite");
}

}  // namespace costcal
