#pragma once

#include <array>
#include <optional>
#include <vector>

#include "costcal/design.hpp"
#include "costcal/model.hpp"
#include "costcal/roots.hpp"

namespace costcal {

/// Residuals of the three boundary equations for φ = a1 x^l1 + a2 x^l2 + b ln x + c:
///   [0] φ'(x̂) - 1/(1+λ)
///   [1] φ'(x*) - 1/(1+λ)
///   [2] (x* - x̂ - κ)/(1+λ) + b ln(x̂/x*) - [a1 (x*^l1 - x̂^l1) + a2 (x*^l2 - x̂^l2)]
std::array<double, 3> boundary_residuals(double a1, double a2, double b, const RootPair& roots,
                                         const PolicyTargets& targets, const CostParams& costs);

/// How the forward Case I system (four unknowns, three equations) is closed.
enum class Closure {
    EqualCoefficients,  // a1 = a2, the Case II shape
    NoSingularTerm,     // a1 = 0, φ stays bounded above as x → 0
};

struct SolveOptions {
    double grid_lo = 0.01;
    double grid_hi = 100.0;
    int grid_points = 6;
    double tolerance = 1e-10;
    int max_iterations = 100;
    int max_halvings = 40;
    double fd_step = 1e-6;        // relative, central differences
    double distinct_rel = 1e-4;   // two roots closer than this are the same
    int threads = 0;              // 0 selects hardware concurrency
    int deflation_rounds = 2;     // multistart reruns with found roots deflated
};

struct ForwardSolution {
    PolicyTargets targets;
    double a1 = 0.0;
    double a2 = 0.0;
    std::array<double, 3> residuals{};  // boundary_residuals at the solution
    double max_residual = 0.0;
    int newton_iterations = 0;
    double condition_number = 0.0;      // 2-norm condition of the reduced Jacobian
    std::vector<Warning> warnings;
    std::vector<double> residual_history;  // max|R| after each accepted Newton step, start included
};

class MultipleSolutionsError : public Error {
public:
    MultipleSolutionsError(std::vector<ForwardSolution> sols, const std::string& what)
        : Error(ErrorCode::MultipleSolutions, what), solutions_(std::move(sols)) {}
    const std::vector<ForwardSolution>& solutions() const noexcept { return solutions_; }

private:
    std::vector<ForwardSolution> solutions_;
};

/// Agent's optimal (x̂, x*) under given (λ, κ) with the Case II shape a1 = a2.
/// With `init` a single damped Newton run starts there; without it a log grid of
/// starting points is used. Throws ForwardSolveFailedError when nothing converges
/// and MultipleSolutionsError (sorted by x̂, then x*) when distinct roots appear.
ForwardSolution forward_solve(const CostParams& costs, const RootPair& roots, double b,
                              const std::optional<PolicyTargets>& init = std::nullopt,
                              const SolveOptions& opts = {});

/// Forward problem with an explicit closure. `reference` holds the (a1, a2) of a
/// Case I design; if they do not satisfy the closure the result carries a
/// ClosureMismatch warning.
ForwardSolution forward_solve_case1(const CostParams& costs, const RootPair& roots, double b,
                                    const std::optional<PolicyTargets>& init = std::nullopt,
                                    Closure closure = Closure::EqualCoefficients,
                                    const std::optional<PowerCoeffs>& reference = std::nullopt,
                                    const SolveOptions& opts = {});

/// The reduced residual pair R(x̂, x*; λ, κ) solved by forward_solve, after the
/// closure has eliminated (a1, a2). NaN entries signal an invalid point.
std::array<double, 2> reduced_residuals(const PolicyTargets& targets, const CostParams& costs, const RootPair& roots,
                                        double b, Closure closure = Closure::EqualCoefficients);

}  // namespace costcal
