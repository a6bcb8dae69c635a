#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "costcal/sens.hpp"
#include "support.hpp"

namespace costcal {
namespace {

using testing::baseline_model;
using testing::kBaselineTargets;

struct Fixture {
    ValidatedModel model = baseline_model();
    RootPair roots = closed_form_roots(model);
    double b = coeff_b_c(model).b;
};

TEST(Sens, ImplicitMatchesFiniteDifferences) {
    const Fixture f;
    std::mt19937_64 g(31);
    for (int i = 0; i < 20; ++i) {
        const auto t = testing::random_targets(g);
        const auto c = design_case2(t, f.roots, f.b);
        const auto ift = sens_ift(c, t, f.roots, f.b);
        const auto fd = sens_fd_adaptive(c, t, f.roots, f.b);
        EXPECT_LE(relative_difference(ift, fd), 1e-4) << t.x_hat << " " << t.x_star;
    }
}

TEST(Sens, TightAgreementAtExamplePoint) {
    const Fixture f;
    const PolicyTargets t{1.0, 2.0};
    const auto c = design_case2(t, f.roots, f.b);
    const auto ift = sens_ift(c, t, f.roots, f.b);
    EXPECT_LE(relative_difference(ift, sens_fd_adaptive(c, t, f.roots, f.b)), 1e-6);
    EXPECT_LE(relative_difference(ift, sens_fd(c, t, f.roots, f.b)), 1e-4);
}

TEST(Sens, FixedStepFailsNearAFoldWhereAdaptiveRecovers) {
    const Fixture f;
    // The forward solution disappears for λ a little above this calibration.
    const PolicyTargets t{0.60716607654113064, 1.7382184790986768};
    const auto c = design_case2(t, f.roots, f.b);
    EXPECT_THROW(sens_fd(c, t, f.roots, f.b), ForwardSolveFailedError);
    EXPECT_LE(relative_difference(sens_ift(c, t, f.roots, f.b), sens_fd_adaptive(c, t, f.roots, f.b)), 1e-4);
}

TEST(Sens, KappaColumnOfParameterJacobianIsExact) {
    const Fixture f;
    const auto c = design_case2(kBaselineTargets, f.roots, f.b);
    const auto j = residual_jacobians(c, kBaselineTargets, f.roots, f.b);
    EXPECT_EQ(j.params[0][1], 0.0);
    EXPECT_EQ(j.params[1][1], -1.0 / (1.0 + c.lambda));
    // Compare the λ column with an independent, coarser difference.
    const double h = 1e-4 * std::max(1.0, c.lambda);
    const auto rp = reduced_residuals(kBaselineTargets, {c.lambda + h, c.kappa}, f.roots, f.b);
    const auto rm = reduced_residuals(kBaselineTargets, {c.lambda - h, c.kappa}, f.roots, f.b);
    EXPECT_NEAR(j.params[0][0], (rp[0] - rm[0]) / (2 * h), 1e-6);
    EXPECT_NEAR(j.params[1][0], (rp[1] - rm[1]) / (2 * h), 1e-6);
}

TEST(Sens, RaisingFixedCostWidensTheBand) {
    const Fixture f;
    const auto c = design_case2(kBaselineTargets, f.roots, f.b);
    const auto s = sens_ift(c, kBaselineTargets, f.roots, f.b);
    EXPECT_LT(s.dxhat_dkappa, 0.0);
    EXPECT_GT(s.dxstar_dkappa, 0.0);
}

TEST(Sens, RichardsonRatioNearFour) {
    const Fixture f;
    const auto c = design_case2(kBaselineTargets, f.roots, f.b);
    const double ratio = richardson_ratio(c, kBaselineTargets, f.roots, f.b);
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
}

TEST(Sens, StepMustBePositive) {
    const Fixture f;
    const auto c = design_case2(kBaselineTargets, f.roots, f.b);
    for (double step : {0.0, -1e-3}) {
        try {
            sens_fd(c, kBaselineTargets, f.roots, f.b, step);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::PositiveStepRequired);
        }
    }
}

TEST(Sens, PrintedFormulasAreFiniteAndInverted) {
    const Fixture f;
    const auto fv = printed_f_values(kBaselineTargets, f.roots, f.b);
    const auto s = sens_printed(kBaselineTargets, f.roots, f.b);
    for (double v : fv) EXPECT_TRUE(std::isfinite(v));
    EXPECT_DOUBLE_EQ(s.dxhat_dlambda, 1.0 / fv[0]);
    EXPECT_DOUBLE_EQ(s.dxstar_dlambda, 1.0 / fv[1]);
    EXPECT_DOUBLE_EQ(s.dxhat_dkappa, 1.0 / fv[2]);
    EXPECT_DOUBLE_EQ(s.dxstar_dkappa, 1.0 / fv[3]);
}

TEST(Sens, NormHelpers) {
    const SensitivityMatrix a{3.0, 0.0, 0.0, 4.0};
    EXPECT_DOUBLE_EQ(frobenius(a), 5.0);
    EXPECT_DOUBLE_EQ(relative_difference(a, a), 0.0);
    const SensitivityMatrix b{3.0, 0.0, 0.0, -4.0};
    EXPECT_DOUBLE_EQ(relative_difference(a, b), 8.0 / 5.0);
}

}  // namespace
}  // namespace costcal
