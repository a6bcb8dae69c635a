#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "costcal/design.hpp"
#include "costcal/solve.hpp"
#include "support.hpp"

namespace costcal {
namespace {

using testing::baseline_model;
using testing::kBaselineTargets;

struct Fixture {
    ValidatedModel model = baseline_model();
    RootPair roots = closed_form_roots(model);
    LogCoeffs lc = coeff_b_c(model);
};

ErrorCode code_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::Io;
}

TEST(Design, GoldenValues) {
    const Fixture f;
    const auto c = design_case2(kBaselineTargets, f.roots, f.lc.b);
    EXPECT_NEAR(c.lambda, 1.1050824548408906, 1e-12);
    EXPECT_NEAR(c.kappa, 0.08227008919345913, 1e-12);
    const auto s = design_case2({1.0, 2.0}, f.roots, f.lc.b);
    EXPECT_NEAR(s.lambda, 0.03203789017442049, 1e-12);
    EXPECT_NEAR(s.kappa, -0.01759448906347183, 1e-12);
}

TEST(Design, CalibrationSatisfiesAllThreeBoundaryConditions) {
    const Fixture f;
    std::mt19937_64 g(11);
    for (int i = 0; i < 50; ++i) {
        const auto t = testing::random_targets(g);
        const auto c = design_case2(t, f.roots, f.lc.b);
        const double a = coeff_case2(t, f.roots, f.lc.b);
        const auto res = boundary_residuals(a, a, f.lc.b, f.roots, t, c);
        const double scale = std::max(1.0, t.x_star);
        for (double r : res) EXPECT_LE(std::abs(r), 1e-9 * scale) << t.x_hat << " " << t.x_star;
    }
}

TEST(Design, KappaMatchesValueMatchingPrimitive) {
    const Fixture f;
    for (const PolicyTargets t : {kBaselineTargets, PolicyTargets{1.0, 2.0}, PolicyTargets{0.3, 2.5}}) {
        const auto c = design_case2(t, f.roots, f.lc.b);
        const double a = coeff_case2(t, f.roots, f.lc.b);
        const double jump = a * (std::pow(t.x_star, f.roots.l1) - std::pow(t.x_hat, f.roots.l1) +
                                 std::pow(t.x_star, f.roots.l2) - std::pow(t.x_hat, f.roots.l2));
        const double primitive =
            t.x_star - t.x_hat - (1.0 + c.lambda) * (jump - f.lc.b * std::log(t.x_hat / t.x_star));
        EXPECT_NEAR(c.kappa, primitive, 1e-11);
    }
}

TEST(Design, CaseOneAtCaseTwoLambdaReproducesKappa) {
    const Fixture f;
    std::mt19937_64 g(12);
    for (int i = 0; i < 20; ++i) {
        const auto t = testing::random_targets(g);
        const auto c = design_case2(t, f.roots, f.lc.b);
        EXPECT_NEAR(design_case1(t, c.lambda, f.roots, f.lc.b), c.kappa, 1e-8 * std::max(1.0, t.x_star));
        const auto k1 = case1_value_coeffs(t, c.lambda, f.roots, f.lc);
        EXPECT_NEAR(k1.a1, k1.a2, 1e-8 * std::max(1.0, std::abs(k1.a1)));
    }
}

TEST(Design, CaseOneSatisfiesBoundaryConditions) {
    const Fixture f;
    for (double lambda : {-0.5, 0.0, 0.4, 3.0}) {
        const PolicyTargets t{2.0, 7.0};
        const double kappa = design_case1(t, lambda, f.roots, f.lc.b);
        const auto a = coeffs_case1(t, lambda, f.roots, f.lc.b);
        const auto res = boundary_residuals(a.a1, a.a2, f.lc.b, f.roots, t, {lambda, kappa});
        for (double r : res) EXPECT_LE(std::abs(r), 1e-10);
    }
}

TEST(Design, KappaIndependentOfUtilityScale) {
    const Fixture f;
    const PolicyTargets t{0.8, 3.0};
    const auto c1 = design_case2(t, f.roots, 1.0);
    const auto c2 = design_case2(t, f.roots, 2.5);
    EXPECT_NEAR(c1.kappa, c2.kappa, 1e-13);
    EXPECT_NEAR((1.0 + c1.lambda) * 1.0, (1.0 + c2.lambda) * 2.5, 1e-12);
}

TEST(Design, ErrorCodes) {
    const Fixture f;
    EXPECT_EQ(code_of([&] { design_case2({2.0, 2.0}, f.roots, f.lc.b); }), ErrorCode::DegenerateTargets);
    EXPECT_EQ(code_of([&] { design_case2({3.0, 2.0}, f.roots, f.lc.b); }), ErrorCode::InvalidTargets);
    EXPECT_EQ(code_of([&] { design_case2({-1.0, 2.0}, f.roots, f.lc.b); }), ErrorCode::InvalidTargets);
}

TEST(Design, EquivalenceTransferIsCaseTwo) {
    const Fixture f;
    const PolicyTargets ext{1.5, 4.0};
    const auto a = equivalence_transfer(ext, f.roots, f.lc.b);
    const auto b = design_case2(ext, f.roots, f.lc.b);
    EXPECT_EQ(a.lambda, b.lambda);
    EXPECT_EQ(a.kappa, b.kappa);
}

TEST(Design, FeasibilityReport) {
    const auto ok = feasibility_report({1.0, 2.0}, {1.0, 0.0});
    EXPECT_DOUBLE_EQ(ok.z_hat, 0.5);
    EXPECT_TRUE(ok.warnings.empty());
    const auto bad = feasibility_report({1.0, 2.0}, {0.03202, 1.41314});
    ASSERT_EQ(bad.warnings.size(), 1u);
    EXPECT_EQ(bad.warnings[0], Warning::PurchaseSizeNonpositive);
    EXPECT_LT(bad.z_hat, 0.0);
    EXPECT_EQ(to_string(Warning::ClosureMismatch), "ClosureMismatch");
}

TEST(Design, IdentityRetargetIsFixedPoint) {
    const Fixture f;
    const auto c0 = design_case2(kBaselineTargets, f.roots, f.lc.b);
    const auto c1 = retarget(c0, {}, f.roots, f.lc.b, kBaselineTargets);
    EXPECT_NEAR(c1.lambda, c0.lambda, 1e-8);
    EXPECT_NEAR(c1.kappa, c0.kappa, 1e-8);
}

TEST(Design, RetargetMovesTheForwardSolution) {
    const Fixture f;
    const auto c0 = design_case2(kBaselineTargets, f.roots, f.lc.b);
    const auto c1 = retarget(c0, {0.5, -0.25}, f.roots, f.lc.b, kBaselineTargets);
    const auto sol = forward_solve(c1, f.roots, f.lc.b, PolicyTargets{4.75, 10.5});
    EXPECT_NEAR(sol.targets.x_hat, 4.75, 1e-7);
    EXPECT_NEAR(sol.targets.x_star, 10.5, 1e-7);
}

TEST(Design, RetargetRejectsInvalidShift) {
    const Fixture f;
    const auto c0 = design_case2(kBaselineTargets, f.roots, f.lc.b);
    EXPECT_EQ(code_of([&] { retarget(c0, {0.0, -6.0}, f.roots, f.lc.b, kBaselineTargets); }),
              ErrorCode::InvalidShift);
    EXPECT_EQ(code_of([&] { retarget(c0, {-6.0, 0.0}, f.roots, f.lc.b, kBaselineTargets); }),
              ErrorCode::InvalidShift);
    EXPECT_EQ(code_of([&] { retarget(c0, {std::nan(""), 0.0}, f.roots, f.lc.b, kBaselineTargets); }),
              ErrorCode::InvalidShift);
}

}  // namespace
}  // namespace costcal
