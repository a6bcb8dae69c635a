#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "costcal/roots.hpp"
#include "support.hpp"

namespace costcal {
namespace {

TEST(Roots, CharFnSpecialValues) {
    const auto m = testing::baseline_model();
    EXPECT_DOUBLE_EQ(char_fn(m, 0.0), -0.1);
    EXPECT_DOUBLE_EQ(char_fn(testing::jump_model(), 0.0), -0.1);
    EXPECT_NEAR(char_fn(m, 1.0), 0.05 - 0.1, 1e-16);
    EXPECT_NEAR(char_fn(m, 2.0), 0.09, 1e-15);
}

TEST(Roots, ClosedFormBaseline) {
    const auto r = closed_form_roots(testing::baseline_model());
    EXPECT_NEAR(r.l1, -1.5473023980108394, 1e-14);
    EXPECT_NEAR(r.l2, 1.436191286899728, 1e-14);
    // Independent oracle: 0.045 l^2 + 0.005 l - 0.1 = 0.
    for (double l : {r.l1, r.l2}) EXPECT_LT(std::abs(0.045 * l * l + 0.005 * l - 0.1), 1e-12);
}

TEST(Roots, SymmetricWhenDriftEqualsHalfVariance) {
    const auto m = validate_model({0.045, 0.3, 0.1, 0.1}, {});
    const auto r = closed_form_roots(m);
    EXPECT_NEAR(r.l2, std::sqrt(0.2) / 0.3, 1e-14);
    EXPECT_NEAR(r.l1, -r.l2, 1e-14);
}

TEST(Roots, ClosedFormRejectsJumps) {
    try {
        closed_form_roots(testing::jump_model());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::JumpsPresent);
    }
}

TEST(Roots, SolverMatchesClosedFormOnRandomModels) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> gam(-0.2, 0.3), sig(0.05, 1.0), del(0.01, 0.5);
    for (int i = 0; i < 100; ++i) {
        const auto m = validate_model({gam(g), sig(g), del(g), 0.1}, {});
        const auto a = solve_roots(m), b = closed_form_roots(m);
        EXPECT_LE(testing::rel(a.l1, b.l1), 1e-10);
        EXPECT_LE(testing::rel(a.l2, b.l2), 1e-10);
    }
}

TEST(Roots, JumpRootsSolveH) {
    const auto m = testing::jump_model();
    const auto r = solve_roots(m);
    EXPECT_LT(r.l1, 0.0);
    EXPECT_GT(r.l2, 0.0);
    EXPECT_LE(std::abs(char_fn(m, r.l1)), 1e-10);
    EXPECT_LE(std::abs(char_fn(m, r.l2)), 1e-10);
    // Reference values from an independent Brent solve of h.
    EXPECT_NEAR(r.l1, -1.0384715934447026, 1e-12);
    EXPECT_NEAR(r.l2, 1.336004958805176, 1e-12);
}

TEST(Roots, ZeroRateAtomChangesNothing) {
    const auto base = solve_roots(testing::baseline_model());
    const auto padded = solve_roots(validate_model({0.05, 0.3, 0.1, 0.1}, JumpSpec{{{0.0, 0.7}}}));
    EXPECT_NEAR(base.l1, padded.l1, 1e-12);
    EXPECT_NEAR(base.l2, padded.l2, 1e-12);
}

TEST(Roots, ExactlyTwoSignChanges) {
    // h is convex with h(0) < 0, so it changes sign exactly once on each side.
    const auto m = testing::jump_model();
    int changes = 0;
    double prev = char_fn(m, -64.0);
    for (double l = -64.0 + 0.01; l <= 64.0; l += 0.01) {
        const double cur = char_fn(m, l);
        if ((cur < 0.0) != (prev < 0.0)) ++changes;
        prev = cur;
    }
    EXPECT_EQ(changes, 2);
}

TEST(Roots, BracketFailureReportsLimit) {
    // Tiny σ and δ with a huge negative drift push l2 beyond the search limit.
    const auto m = validate_model({-50.0, 1e-3, 1e-3, 0.1}, {});
    try {
        solve_roots(m);
        FAIL();
    } catch (const BracketNotFoundError& e) {
        EXPECT_EQ(e.limit(), 256.0);
        EXPECT_EQ(e.category(), ErrorCategory::Solver);
    }
}

}  // namespace
}  // namespace costcal
