#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "costcal/design.hpp"
#include "costcal/value.hpp"
#include "support.hpp"

namespace costcal {
namespace {

using testing::baseline_model;
using testing::kBaselineTargets;

TEST(Value, LogCoefficients) {
    const auto lc = coeff_b_c(baseline_model());
    EXPECT_DOUBLE_EQ(lc.b, 1.0);
    EXPECT_NEAR(lc.c, 0.05, 1e-15);
    EXPECT_NEAR(coeff_b_c(validate_model({0.045, 0.3, 0.1, 0.1}, {})).c, 0.0, 1e-15);
    const auto jc = coeff_b_c(testing::jump_model());
    const double bracket = 0.05 - 0.045 + 0.5 * (std::log(0.8) + 0.2) + 0.25 * (std::log(1.4) - 0.4);
    EXPECT_NEAR(jc.c, 10.0 * bracket, 1e-14);
}

// Oracle: solve φ'(x̂) = φ'(x*) = 1/(1+λ) as a 2x2 linear system in (a1, a2).
PowerCoeffs linear_oracle(const PolicyTargets& t, double lambda, const RootPair& r, double b) {
    const double inv = 1.0 / (1.0 + lambda);
    const double m11 = r.l1 * std::pow(t.x_hat, r.l1 - 1), m12 = r.l2 * std::pow(t.x_hat, r.l2 - 1);
    const double m21 = r.l1 * std::pow(t.x_star, r.l1 - 1), m22 = r.l2 * std::pow(t.x_star, r.l2 - 1);
    const double r1 = inv - b / t.x_hat, r2 = inv - b / t.x_star;
    const double det = m11 * m22 - m12 * m21;
    return {(r1 * m22 - m12 * r2) / det, (m11 * r2 - r1 * m21) / det};
}

TEST(Value, CaseOneMatchesLinearSolve) {
    const auto r = closed_form_roots(baseline_model());
    for (double t : {1.0, 0.5, 2.0}) {
        const PolicyTargets tg{1.0, 2.0};
        const auto got = coeffs_case1(tg, 0.0, r, t);
        const auto want = linear_oracle(tg, 0.0, r, t);
        EXPECT_LE(testing::rel(got.a1, want.a1), 1e-10);
        EXPECT_LE(testing::rel(got.a2, want.a2), 1e-10);
        const ValueCoeffs k{got.a1, got.a2, t, 0.0, CoeffMode::CaseI};
        EXPECT_LT(std::abs(phi_prime(k, r, 1.0) - 1.0), 1e-10);
        EXPECT_LT(std::abs(phi_prime(k, r, 2.0) - 1.0), 1e-10);
    }
    std::mt19937_64 g(3);
    for (int i = 0; i < 20; ++i) {
        const auto tg = testing::random_targets(g);
        const auto got = coeffs_case1(tg, 0.3, r, 1.0);
        const auto want = linear_oracle(tg, 0.3, r, 1.0);
        EXPECT_LE(std::abs(got.a1 - want.a1), 1e-9 * std::max(1.0, std::abs(want.a1)));
        EXPECT_LE(std::abs(got.a2 - want.a2), 1e-9 * std::max(1.0, std::abs(want.a2)));
    }
}

TEST(Value, DegenerateTargets) {
    const auto r = closed_form_roots(baseline_model());
    EXPECT_THROW(
        {
            try {
                coeffs_case1({2.0, 2.0}, 0.0, r, 1.0);
            } catch (const Error& e) {
                EXPECT_EQ(e.code(), ErrorCode::DegenerateTargets);
                throw;
            }
        },
        Error);
    try {
        coeff_case2({2.0, 2.0}, r, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateTargets);
    }
}

TEST(Value, CaseTwoCoefficient) {
    const auto r = closed_form_roots(baseline_model());
    const double a = coeff_case2({1.0, 2.0}, r, 1.0);
    EXPECT_NEAR(a, 0.27938994712786425, 1e-13);
    const double hand = -1.0 / (2.0 * (r.l1 * (1.0 - std::pow(2.0, r.l1 - 1)) + r.l2 * (1.0 - std::pow(2.0, r.l2 - 1))));
    EXPECT_NEAR(a, hand, 1e-14);
    EXPECT_NEAR(1.0 - std::pow(2.0, r.l1 - 1), 0.8289253854437257, 1e-13);
    EXPECT_NEAR(1.0 - std::pow(2.0, r.l2 - 1), -0.3530276170558422, 1e-13);
}

TEST(Value, PhiEvaluation) {
    const RootPair r{-1.5, 1.5};
    const ValueCoeffs log_only{0.0, 0.0, 1.0, 0.0, CoeffMode::CaseII};
    EXPECT_EQ(phi(log_only, r, 1.0, 0.0, 0.1), 0.0);
    EXPECT_NEAR(phi(log_only, r, std::exp(1.0), 3.0, 0.1), std::exp(-0.3), 1e-15);
    const auto rr = closed_form_roots(baseline_model());
    const double a = coeff_case2({1.0, 2.0}, rr, 1.0);
    const ValueCoeffs k{a, a, 1.0, 0.05, CoeffMode::CaseII};
    const double term = a * std::pow(1.5, rr.l1) + a * std::pow(1.5, rr.l2) + std::log(1.5) + 0.05;
    EXPECT_NEAR(phi(k, rr, 1.5), term, 1e-15);
    try {
        phi(k, rr, 0.0, 0.0, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonPositiveState);
    }
}

TEST(Value, DerivativesMatchFiniteDifferences) {
    const auto rr = closed_form_roots(baseline_model());
    const ValueCoeffs k{0.3, -0.02, 1.0, 0.05, CoeffMode::CaseI};
    for (double x : {0.5, 2.0, 7.0}) {
        const double h = 1e-5 * x;
        EXPECT_NEAR(phi_prime(k, rr, x), (phi(k, rr, x + h) - phi(k, rr, x - h)) / (2 * h), 1e-7);
        EXPECT_NEAR(phi_second(k, rr, x), (phi_prime(k, rr, x + h) - phi_prime(k, rr, x - h)) / (2 * h), 1e-6);
    }
}

TEST(Value, GeneratorAnnihilatesPhi) {
    for (const auto& m : {baseline_model(), testing::jump_model()}) {
        const auto r = solve_roots(m);
        const auto lc = coeff_b_c(m);
        const ValueCoeffs k{0.7, -0.3, lc.b, lc.c, CoeffMode::CaseI};
        for (double x : {0.1, 1.0, 3.0, 20.0}) EXPECT_LT(std::abs(generator_residual(k, r, m, x)), 1e-9);
    }
}

TEST(Value, LogPartResidualIsConstant) {
    const auto m = testing::jump_model();
    const auto r = solve_roots(m);
    const ValueCoeffs k{0.0, 0.0, coeff_b_c(m).b, 0.0, CoeffMode::CaseII};
    EXPECT_LT(std::abs(generator_residual(k, r, m, 0.3) - generator_residual(k, r, m, 9.0)), 1e-10);
}

TEST(Value, SmoothPastingAtCaseTwoCalibration) {
    const auto m = baseline_model();
    const auto r = closed_form_roots(m);
    const auto lc = coeff_b_c(m);
    for (const PolicyTargets t : {PolicyTargets{1.0, 2.0}, kBaselineTargets}) {
        const auto costs = design_case2(t, r, lc.b);
        const auto k = case2_value_coeffs(t, r, lc);
        const double inv = 1.0 / (1.0 + costs.lambda);
        EXPECT_LT(std::abs(phi_prime(k, r, t.x_hat) - inv), 1e-9);
        EXPECT_LT(std::abs(phi_prime(k, r, t.x_star) - inv), 1e-9);
        EXPECT_LT(std::abs(phi(k, r, t.x_star) - phi(k, r, t.x_hat) - (t.x_star - t.x_hat - costs.kappa) * inv), 1e-9);
        // c cancels from the value-matching condition.
        ValueCoeffs shifted = k;
        shifted.c += 3.0;
        EXPECT_NEAR(phi(shifted, r, t.x_star) - phi(shifted, r, t.x_hat), phi(k, r, t.x_star) - phi(k, r, t.x_hat),
                    1e-12);
    }
}

struct Calibrated {
    ValidatedModel model = baseline_model();
    RootPair roots = closed_form_roots(model);
    LogCoeffs lc = coeff_b_c(model);
    CostParams costs = design_case2(kBaselineTargets, roots, lc.b);
    ValueCoeffs k = case2_value_coeffs(kBaselineTargets, roots, lc);
};

TEST(Value, InterventionAtThreshold) {
    const Calibrated c;
    const InterventionOperator op(c.k, c.roots, c.costs, PostStateDomain{0.5, kBaselineTargets.x_star});
    const auto res = op(kBaselineTargets.x_star);
    EXPECT_NEAR(res.m_value, phi(c.k, c.roots, kBaselineTargets.x_star), 1e-10);
    EXPECT_NEAR(res.z_star, (10.0 - 5.0 - c.costs.kappa) / (1.0 + c.costs.lambda), 1e-7);
    EXPECT_NEAR(res.post_state, 5.0, 1e-7);
    // x̂ is the interior stationary maximum of the objective.
    bool found = false;
    for (double y : op.stationary_points()) found = found || std::abs(y - 5.0) < 1e-8;
    EXPECT_TRUE(found);
}

TEST(Value, InterventionBelowPhiInContinuationRegion) {
    const Calibrated c;
    const InterventionOperator op(c.k, c.roots, c.costs, PostStateDomain{0.5, kBaselineTargets.x_star});
    for (double x : {1.0, 3.0, 6.0, 9.0}) {
        const auto res = op(x);
        // Brute-force oracle over the post-state window.
        double best = -1e300;
        const double hi = x - c.costs.kappa;
        for (int i = 0; i <= 200000; ++i) {
            const double y = 0.5 + (hi - 0.5) * i / 200000.0;
            best = std::max(best, op.objective(y));
        }
        const double oracle = best + (x - c.costs.kappa) / (1.0 + c.costs.lambda);
        EXPECT_GE(res.m_value, oracle - 1e-12);
        EXPECT_LE(res.m_value - oracle, 1e-8);
        EXPECT_LT(res.m_value, phi(c.k, c.roots, x));
    }
}

TEST(Value, InterventionEmptyFeasibleSet) {
    const Calibrated c;
    try {
        intervention_value(c.k, c.roots, {0.0, 5.0}, 3.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyFeasibleSet);
    }
    const InterventionOperator op(c.k, c.roots, {0.0, 5.0});
    EXPECT_FALSE(op.try_eval(3.0).has_value());
}

TEST(Value, UnboundedDomainScansUpToTheReachableLevel) {
    const Calibrated c;
    const auto res = intervention_value(c.k, c.roots, c.costs, 10.0, PostStateDomain{0.5});
    EXPECT_NEAR(res.post_state, 5.0, 1e-7);
}

TEST(Value, QviPassesAtBaselineCalibration) {
    const Calibrated c;
    const auto rep = qvi_check(c.k, c.roots, c.model, c.costs, kBaselineTargets);
    EXPECT_EQ(rep.grid.size(), 2048u);
    EXPECT_LE(rep.max_abs_residual_continuation, 1e-8);
    EXPECT_LE(rep.max_gap_intervention, 1e-8);
    EXPECT_GE(rep.min_margin_continuation, -1e-8);
    EXPECT_TRUE(rep.passed);
    for (std::size_t i = 1; i < rep.grid.size(); ++i) EXPECT_LT(rep.grid[i - 1].x, rep.grid[i].x);
    bool has_threshold = false;
    for (const auto& row : rep.grid) has_threshold = has_threshold || row.x == kBaselineTargets.x_star;
    EXPECT_TRUE(has_threshold);
}

TEST(Value, QviFlagsMiscalibratedKappa) {
    const Calibrated c;
    const CostParams off{c.costs.lambda, c.costs.kappa + 0.1};
    const auto rep = qvi_check(c.k, c.roots, c.model, off, kBaselineTargets);
    EXPECT_FALSE(rep.passed);
    EXPECT_TRUE(rep.max_gap_intervention > 1e-8 || rep.min_margin_continuation < -1e-8);
}

TEST(Value, QviGridValidation) {
    const Calibrated c;
    QviGridSpec bad;
    bad.x_min = 6.0;
    EXPECT_THROW(qvi_check(c.k, c.roots, c.model, c.costs, kBaselineTargets, bad), Error);
}

}  // namespace
}  // namespace costcal
