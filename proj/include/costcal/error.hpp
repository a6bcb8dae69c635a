#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace costcal {

enum class ErrorCode {
    // input validation
    NonPositiveSigma,
    NonPositiveDelta,
    ZeroEpsilon,
    JumpFactorBelowMinusOne,
    NegativeRate,
    NonFiniteParameter,
    InvalidTargets,
    InvalidCosts,
    InvalidPolicy,
    InvalidShift,
    InvalidSimConfig,
    InvalidGrid,
    InvalidConfig,
    InfeasiblePolicy,
    NonPositiveInitialState,
    NonPositiveState,
    PositiveStepRequired,
    JumpsPresent,
    DegenerateTargets,
    InfeasibleLambda,
    EmptyFeasibleSet,
    // numerical failures
    BracketNotFound,
    SingularSystem,
    SingularSensitivity,
    SingularJacobian,
    ForwardSolveFailed,
    MultipleSolutions,
    // environment
    Io,
};

enum class ErrorCategory { Validation, Solver, Io };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

/// Base of every error the library raises. The message always names the
/// offending field or operation.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }
    /// The message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

class BracketNotFoundError : public Error {
public:
    BracketNotFoundError(double limit, const std::string& what)
        : Error(ErrorCode::BracketNotFound, what), limit_(limit) {}
    double limit() const noexcept { return limit_; }

private:
    double limit_;
};

class ForwardSolveFailedError : public Error {
public:
    ForwardSolveFailedError(double best_residual, const std::string& what)
        : Error(ErrorCode::ForwardSolveFailed, what), best_residual_(best_residual) {}
    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

}  // namespace costcal
