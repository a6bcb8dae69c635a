#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "costcal/model.hpp"
#include "costcal/roots.hpp"

namespace costcal {

enum class CoeffMode { CaseI, CaseII };

/// Coefficients of φ(x) = a1 x^l1 + a2 x^l2 + b ln x + c.
/// In CaseII mode a1 == a2.
struct ValueCoeffs {
    double a1 = 0.0;
    double a2 = 0.0;
    double b = 0.0;
    double c = 0.0;
    CoeffMode mode = CoeffMode::CaseII;
};

struct LogCoeffs {
    double b = 0.0;
    double c = 0.0;
};

struct PowerCoeffs {
    double a1 = 0.0;
    double a2 = 0.0;
};

/// b = ε/δ and the constant c that annihilates the x-independent part of the
/// generator equation for b ln x + c.
LogCoeffs coeff_b_c(const ValidatedModel& model);

/// Case I (λ given): the (a1, a2) satisfying the two first-order conditions
/// φ'(x̂) = φ'(x*) = 1/(1+λ).
PowerCoeffs coeffs_case1(const PolicyTargets& targets, double lambda, const RootPair& roots, double b);

/// Case II: shared coefficient a = b z / (x* x̂ (l1 z^{l1-1} + l2 z^{l2-1})),
/// with z^m := x̂^m - x*^m.
double coeff_case2(const PolicyTargets& targets, const RootPair& roots, double b);

/// Undiscounted profile φ(x) and its derivatives; x must be positive.
double phi(const ValueCoeffs& coeffs, const RootPair& roots, double x);
double phi_prime(const ValueCoeffs& coeffs, const RootPair& roots, double x);
double phi_second(const ValueCoeffs& coeffs, const RootPair& roots, double x);

/// Discounted value e^{-δ s} φ(x). Throws NonPositiveState for x <= 0.
double phi(const ValueCoeffs& coeffs, const RootPair& roots, double x, double s, double delta);

/// e^{δs}(∂_s + L)φ + U at x, evaluated from the closed form with exact
/// derivatives and the jump integral as an atom sum.
double generator_residual(const ValueCoeffs& coeffs, const RootPair& roots, const ValidatedModel& model,
                          double x);

/// Admissible post-purchase levels y for the intervention operator.
struct PostStateDomain {
    double lower = 1e-9;
    double upper = std::numeric_limits<double>::infinity();
};

struct InterventionResult {
    double m_value = 0.0;
    double z_star = 0.0;
    double post_state = 0.0;
};

/// Mφ(x) = sup over z >= 0 of φ(x - κ - (1+λ)z) + z, with post-state y restricted
/// to the domain. Stationary points of y ↦ φ(y) - y/(1+λ) are located by a
/// log-spaced sign scan followed by bracketed root refinement; the endpoints are
/// always candidates, so non-monotone φ' is handled.
class InterventionOperator {
public:
    InterventionOperator(const ValueCoeffs& coeffs, const RootPair& roots, const CostParams& costs,
                         PostStateDomain domain = {}, int scan_points = 512);

    /// Throws EmptyFeasibleSet if no admissible post-state is reachable from x.
    InterventionResult operator()(double x) const;

    /// Optional variant returning nullopt instead of throwing.
    std::optional<InterventionResult> try_eval(double x) const;

    const std::vector<double>& stationary_points() const noexcept { return stationary_; }

    /// φ(y) - y/(1+λ); Mφ(x) is its maximum over admissible y plus (x-κ)/(1+λ).
    double objective(double y) const;

private:
    struct Candidate {
        double y;
        double value;
    };
    void build_candidates(double lo, double hi, int scan_points);
    std::optional<InterventionResult> eval_with(double x, const std::vector<Candidate>& best_prefix) const;

    ValueCoeffs coeffs_;
    RootPair roots_;
    CostParams costs_;
    PostStateDomain domain_;
    int scan_points_;
    std::vector<double> stationary_;
    // Sorted by y; value holds the running maximum up to that y and y its argmax.
    std::vector<Candidate> prefix_best_;
    std::vector<double> prefix_y_;
};

InterventionResult intervention_value(const ValueCoeffs& coeffs, const RootPair& roots, const CostParams& costs,
                                      double x, PostStateDomain domain = {});

struct QviGridSpec {
    int points = 2048;
    // <= 0 selects the defaults 0.1·x̂ and 2·x*.
    double x_min = 0.0;
    double x_max = 0.0;
    double tolerance = 1e-8;
};

struct QviRow {
    double x = 0.0;
    double phi = 0.0;
    double m_phi = 0.0;          // -inf when no admissible intervention exists
    double residual = 0.0;       // NaN outside the continuation region
    bool continuation = false;
};

struct QviReport {
    std::vector<QviRow> grid;
    double min_margin_continuation = 0.0;
    double max_abs_residual_continuation = 0.0;
    double max_gap_intervention = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    // φ → +∞ as x → 0+ when the x^{l1} coefficient is positive, so the operator
    // is only meaningful on a bounded-below post-state window.
    bool singular_term_positive = false;
    double window_lower = 0.0;
};

/// Grid verification of the quasi-variational inequality for the candidate
/// value V = φ on D = (0, x*) and V = φ(x̂) + (x - x̂ - κ)/(1+λ) on [x*, ∞).
/// The intervention operator ranges over post-states inside [x_min, x*].
QviReport qvi_check(const ValueCoeffs& coeffs, const RootPair& roots, const ValidatedModel& model,
                    const CostParams& costs, const PolicyTargets& targets, const QviGridSpec& grid = {});

}  // namespace costcal
