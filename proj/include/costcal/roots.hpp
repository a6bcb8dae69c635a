#pragma once

#include "costcal/model.hpp"

namespace costcal {

/// The two real roots l1 < 0 < l2 of the characteristic function h.
struct RootPair {
    double l1 = 0.0;
    double l2 = 0.0;
};

/// h(l) = ½σ² l(l-1) + lΓ - δ + Σ wᵢ [(1+γᵢ)^l - 1 - lγᵢ]
double char_fn(const ValidatedModel& model, double l);

/// Quadratic-formula roots of ½σ² l² + (Γ - ½σ²) l - δ = 0. Throws JumpsPresent
/// when the model has jump atoms.
RootPair closed_form_roots(const ValidatedModel& model);

/// Bracketed root search of h on both sides of zero. Works with or without
/// jumps; stops when |h| <= 1e-12 or the bracket collapses to machine precision.
/// Throws BracketNotFoundError if no sign change appears within |l| <= 256.
RootPair solve_roots(const ValidatedModel& model);

}  // namespace costcal
