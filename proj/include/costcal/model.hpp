#pragma once

#include <span>
#include <utility>
#include <vector>

#include "costcal/error.hpp"

namespace costcal {

/// Parameters of the uncontrolled liquidity process dX = Γ X dt + σ X dB + jumps,
/// the agent discount rate δ and the log-utility scale ε in U(x) = ε ln x.
struct ModelParams {
    double gamma_drift = 0.0;
    double sigma = 0.0;
    double delta = 0.0;
    double epsilon = 0.0;
};

/// One atom of a finite-activity Lévy measure: jumps arrive with intensity
/// `rate` and multiply the state by (1 + factor).
struct JumpAtom {
    double rate = 0.0;
    double factor = 0.0;
};

/// Compound-Poisson jump component. An empty list is a pure diffusion.
struct JumpSpec {
    std::vector<JumpAtom> atoms;
};

/// Proportional (λ) and fixed (κ) transaction cost charged per purchase:
/// a purchase of size z removes (1 + λ) z + κ from the liquidity.
struct CostParams {
    double lambda = 0.0;
    double kappa = 0.0;
};

/// Principal's target: intervene at x_star, land at x_hat after purchasing.
struct PolicyTargets {
    double x_hat = 0.0;
    double x_star = 0.0;
};

/// Threshold purchase rule used by the simulator.
struct Policy {
    double trigger = 0.0;
    double after = 0.0;
};

/// Throws InvalidCosts unless λ > -1 and κ is finite.
void validate_costs(const CostParams& costs);

/// Throws InvalidTargets unless 0 < x_hat < x_star (both finite).
void validate_targets(const PolicyTargets& targets);

/// Throws InfeasiblePolicy unless 0 < after < trigger and the purchase size is finite.
void validate_policy(const Policy& policy, const CostParams& costs);

/// Fixed purchase size z = (trigger - after - κ) / (1 + λ).
double purchase_size(const Policy& policy, const CostParams& costs);

inline Policy policy_from_targets(const PolicyTargets& t) { return {t.x_star, t.x_hat}; }

/// A model whose invariants have been checked. Holds the jump totals every
/// other module needs.
class ValidatedModel {
public:
    const ModelParams& params() const noexcept { return params_; }
    std::span<const JumpAtom> atoms() const noexcept { return jumps_.atoms; }
    const JumpSpec& jumps() const noexcept { return jumps_; }
    bool has_jumps() const noexcept { return !jumps_.atoms.empty(); }

    /// Λ = Σ wᵢ
    double total_intensity() const noexcept { return total_intensity_; }
    /// m_γ = Σ wᵢ γᵢ
    double compensator_mean() const noexcept { return compensator_mean_; }

    double gamma_drift() const noexcept { return params_.gamma_drift; }
    double sigma() const noexcept { return params_.sigma; }
    double delta() const noexcept { return params_.delta; }
    double epsilon() const noexcept { return params_.epsilon; }

private:
    friend ValidatedModel validate_model(const ModelParams&, const JumpSpec&);
    ValidatedModel(ModelParams p, JumpSpec j, double lam, double mean)
        : params_(p), jumps_(std::move(j)), total_intensity_(lam), compensator_mean_(mean) {}

    ModelParams params_;
    JumpSpec jumps_;
    double total_intensity_;
    double compensator_mean_;
};

ValidatedModel validate_model(const ModelParams& params, const JumpSpec& jumps);

/// Σᵢ wᵢ f(γᵢ). Exact, since the measure is atomic.
template <class F>
double levy_sum(const ValidatedModel& model, F&& f) {
    double acc = 0.0;
    for (const auto& atom : model.atoms()) acc += atom.rate * f(atom.factor);
    return acc;
}

}  // namespace costcal
