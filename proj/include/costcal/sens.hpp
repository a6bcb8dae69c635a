#pragma once

#include <array>

#include "costcal/model.hpp"
#include "costcal/roots.hpp"
#include "costcal/solve.hpp"

namespace costcal {

/// Derivatives of the agent's optimal (x̂, x*) with respect to (λ, κ).
struct SensitivityMatrix {
    double dxhat_dlambda = 0.0;
    double dxstar_dlambda = 0.0;
    double dxhat_dkappa = 0.0;
    double dxstar_dkappa = 0.0;
};

/// Closed-form sensitivities: the four closed-form f-expressions evaluated as
/// written, each inverted. Throws SingularSensitivity when some |f| < 1e-14.
SensitivityMatrix sens_printed(const PolicyTargets& targets, const RootPair& roots, double b);

/// The raw f-values behind sens_printed, in the order (f1, f2, f3, f4).
std::array<double, 4> printed_f_values(const PolicyTargets& targets, const RootPair& roots, double b);

/// Jacobians of the reduced residual pair R = 0 at a solution.
struct ResidualJacobians {
    std::array<std::array<double, 2>, 2> state{};  // ∂R/∂(x̂, x*)
    std::array<std::array<double, 2>, 2> params{}; // ∂R/∂(λ, κ)
};

/// ∂R/∂(x̂, x*) and ∂R/∂λ by central differences with relative step `step`
/// (scaled by max(|p|, 1)); ∂R/∂κ = (0, -1/(1+λ)) exactly.
ResidualJacobians residual_jacobians(const CostParams& costs, const PolicyTargets& targets, const RootPair& roots,
                                     double b, double step = 1e-6);

/// Implicit-function-theorem sensitivities -(∂R/∂x)⁻¹ ∂R/∂p. `targets` must
/// solve the forward system under `costs`. Throws SingularJacobian.
SensitivityMatrix sens_ift(const CostParams& costs, const PolicyTargets& targets, const RootPair& roots, double b,
                           double step = 1e-6);

/// Central differences of forward_solve (seeded at `targets`) with step
/// step·max(|p|, 1) per parameter. Throws PositiveStepRequired for step <= 0.
SensitivityMatrix sens_fd(const CostParams& costs, const PolicyTargets& targets, const RootPair& roots, double b,
                          double step = 1e-4);

struct AdaptiveFdOptions {
    double initial_step = 1e-4;
    double min_step = 1e-9;
    double agreement = 1e-5;  // relative change between successive steps
};

/// sens_fd with the step chosen per parameter: the step shrinks tenfold until
/// two successive columns agree, which keeps the difference in its asymptotic
/// regime near folds of the forward map where the response is steep.
SensitivityMatrix sens_fd_adaptive(const CostParams& costs, const PolicyTargets& targets, const RootPair& roots,
                                   double b, const AdaptiveFdOptions& opts = {});

/// ‖D(h) - D(h/2)‖ / ‖D(h/2) - D(h/4)‖ (Frobenius) for D = sens_fd; close to 4
/// when the central difference is in its second-order regime.
double richardson_ratio(const CostParams& costs, const PolicyTargets& targets, const RootPair& roots, double b,
                        double step = 1e-2);

double frobenius(const SensitivityMatrix& m);

/// ‖A - B‖ / max(‖A‖, ‖B‖), Frobenius norm.
double relative_difference(const SensitivityMatrix& a, const SensitivityMatrix& b);

}  // namespace costcal
