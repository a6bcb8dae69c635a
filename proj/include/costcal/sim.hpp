#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "costcal/model.hpp"
#include "costcal/roots.hpp"

namespace costcal {

struct SimConfig {
    double dt = 1e-3;
    double t_max = 40.0;
    std::int64_t paths = 10000;
    std::uint64_t seed = 0;
    double x0 = 1.0;
    int threads = 0;  // 0 selects hardware concurrency; results do not depend on it
};

/// Principal's discount, purchase gain λ_P z + c_P τ + α_P and running gain
/// W(r, x) = e^{-δ_p r} (w0 + w1 x + w2 ln x).
struct PrincipalParams {
    double delta_p = 0.05;
    double lambda_p = 1.0;
    double c_p = 0.0;
    double alpha_p = 0.0;
    double w0 = 0.0;
    double w1 = 0.0;
    double w2 = 0.0;
};

struct PayoffEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t paths_used = 0;
    std::int64_t bankruptcies = 0;
    double mean_purchases = 0.0;
    // Mean over paths of a bound on the payoff discarded beyond t_max.
    double tail_bound = 0.0;
};

/// Throws InvalidSimConfig or NonPositiveInitialState.
void validate_sim_config(const SimConfig& cfg);

/// Number of Euler steps, t_max/dt rounded up.
std::int64_t step_count(const SimConfig& cfg);

/// Agent payoff E[∫ e^{-δr} ε ln X_r dr + Σ e^{-δτ_j} z] under a threshold policy.
/// Euler–Maruyama on X with compensated drift (Γ - Σwᵢγᵢ), compound-Poisson
/// jumps, purchases checked at step boundaries and a left-point utility sum.
PayoffEstimate simulate_agent(const ValidatedModel& model, const CostParams& costs, const Policy& policy,
                              const SimConfig& cfg);

PayoffEstimate simulate_principal(const ValidatedModel& model, const CostParams& costs, const Policy& policy,
                                  const PrincipalParams& pp, const SimConfig& cfg);

struct GridEntry {
    Policy policy;
    PayoffEstimate estimate;
};

struct GridResult {
    std::vector<GridEntry> entries;
    std::size_t argmax = 0;
};

/// Agent payoff for every policy on the same simulated paths.
GridResult policy_grid(const ValidatedModel& model, const CostParams& costs, const std::vector<Policy>& grid,
                       const SimConfig& cfg);

/// n×n policies with trigger x*(1+s) and after x̂(1+s'), s, s' evenly spaced in
/// [-span, span]. Row-major in the trigger.
std::vector<Policy> policy_neighbourhood(const PolicyTargets& center, double span, int n);

/// n×n targets spaced like policy_neighbourhood; pairs violating x̂ < x* are dropped.
std::vector<PolicyTargets> target_neighbourhood(const PolicyTargets& center, double span, int n);

struct TargetEntry {
    PolicyTargets targets;
    std::optional<CostParams> costs;
    std::optional<PayoffEstimate> estimate;
    std::string error;  // set when the design step failed
};

struct TargetSearchResult {
    std::vector<TargetEntry> entries;
    std::optional<std::size_t> best;
};

/// For each target: Case II costs, then the Principal payoff of the induced
/// policy. All feasible targets share simulated paths.
TargetSearchResult principal_target_search(const ValidatedModel& model, const std::vector<PolicyTargets>& targets,
                                           const PrincipalParams& pp, const SimConfig& cfg, const RootPair& roots,
                                           double b);

/// E[e^{-Γ t_max} X_{t_max}] for the uncontrolled process (0 after bankruptcy).
PayoffEstimate discounted_terminal_state(const ValidatedModel& model, const SimConfig& cfg);

/// Exact agent value of a threshold policy under continuous monitoring and no
/// jumps: b ln x + c + A x^{l2} below the trigger. Throws JumpsPresent.
double threshold_policy_value(const ValidatedModel& model, const CostParams& costs, const Policy& policy, double x0);

}  // namespace costcal
