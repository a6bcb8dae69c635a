#include "costcal/sens.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail.hpp"

namespace costcal {

std::array<double, 4> printed_f_values(const PolicyTargets& t, const RootPair& r, double b) {
    if (t.x_hat == t.x_star) throw Error(ErrorCode::DegenerateTargets, "sens_printed: x_hat equals x_star");
    validate_targets(t);
    using detail::zpow;
    const double l1 = r.l1, l2 = r.l2;
    const double xh = t.x_hat, xs = t.x_star;
    const double z = xh - xs;
    const double n = l1 * zpow(t, l1 - 1.0) + l2 * zpow(t, l2 - 1.0);
    const double d = l1 * zpow(t, l1) + l2 * zpow(t, l2);
    const double g = xh * xs * std::log(xh / xs);
    const double zsum = zpow(t, l1) + zpow(t, l2);
    auto p = [](double x, double m) { return std::pow(x, m); };

    const double s1 = l1 * l1 * p(xh, l1 - 1.0) + l2 * l2 * p(xh, l2 - 1.0);
    const double s2 = l1 * (l1 - 1.0) * p(xh, l1 - 2.0) + l2 * (l2 - 1.0) * p(xh, l2 - 2.0);
    const double f1 = (xs / b) * (n / d) * (1.0 - xh * s1 / d) + (xh * xs / b) * s2 / d;
    const double f2 = (xh / b) * (n / d) * (1.0 + xs * s1 / d) - (xh * xs / b) * s2 / d;

    // The last factor mixes z^{l1-1} with z^{l2-2}; kept verbatim, so the result is only a reference value.
    const double tail = (l1 * zpow(t, l1 - 1.0) - l2 * zpow(t, l2 - 2.0)) / d;
    auto f34 = [&](double x) {
        const double q1 = l1 * l1 * p(x, l1 - 1.0) - l2 * l2 * p(x, l2 - 1.0);
        const double q2 = l1 * l1 * p(x, l1 - 2.0) - l2 * l2 * p(x, l2 - 2.0);
        const double q0 = (l1 * p(x, l1 - 2.0) - l2 * p(x, l2 - 2.0)) / d;
        return std::array<double, 3>{q0, q1, q2};
    };
    const auto h = f34(xh);
    const double f3 = (z * xh - g) * h[0] + (zsum / d) * (1.0 - z * h[1] / d) + g * h[2] / d -
                      (g / xh + xs + g * h[1] / d) * tail - 1.0;
    const auto s = f34(xs);
    const double f4 = (g - z * xs) * s[0] - (zsum / d) * (1.0 - z * s[1] / d) - g * s[2] / d -
                      (g / xs - xs - g * s[1] / d) * tail + 1.0;
    return {f1, f2, f3, f4};
}

SensitivityMatrix sens_printed(const PolicyTargets& t, const RootPair& r, double b) {
    const auto f = printed_f_values(t, r, b);
    for (int i = 0; i < 4; ++i)
        if (!(std::abs(f[static_cast<std::size_t>(i)]) >= 1e-14))
            throw Error(ErrorCode::SingularSensitivity, "sens_printed: |f" + std::to_string(i + 1) + "| < 1e-14");
    return {1.0 / f[0], 1.0 / f[1], 1.0 / f[2], 1.0 / f[3]};
}

ResidualJacobians residual_jacobians(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b,
                                     double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::PositiveStepRequired, "residual_jacobians: step must be > 0");
    ResidualJacobians j;
    const double hx = step * t.x_hat, hs = step * t.x_star;
    const auto rxp = reduced_residuals({t.x_hat + hx, t.x_star}, costs, r, b);
    const auto rxm = reduced_residuals({t.x_hat - hx, t.x_star}, costs, r, b);
    const auto rsp = reduced_residuals({t.x_hat, t.x_star + hs}, costs, r, b);
    const auto rsm = reduced_residuals({t.x_hat, t.x_star - hs}, costs, r, b);
    const double hl = step * std::max(std::abs(costs.lambda), 1.0);
    const auto rlp = reduced_residuals(t, {costs.lambda + hl, costs.kappa}, r, b);
    const auto rlm = reduced_residuals(t, {costs.lambda - hl, costs.kappa}, r, b);
    for (std::size_t i = 0; i < 2; ++i) {
        j.state[i][0] = (rxp[i] - rxm[i]) / (2.0 * hx);
        j.state[i][1] = (rsp[i] - rsm[i]) / (2.0 * hs);
        j.params[i][0] = (rlp[i] - rlm[i]) / (2.0 * hl);
    }
    // R is affine in κ: only the value-matching residual depends on it.
    j.params[0][1] = 0.0;
    j.params[1][1] = -1.0 / (1.0 + costs.lambda);
    return j;
}

SensitivityMatrix sens_ift(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b,
                           double step) {
    validate_costs(costs);
    validate_targets(t);
    const auto j = residual_jacobians(costs, t, r, b, step);
    const auto& a = j.state;
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double scale = std::max({std::abs(a[0][0] * a[1][1]), std::abs(a[0][1] * a[1][0]), 1e-300});
    if (!std::isfinite(det) || std::abs(det) < 1e-12 * scale)
        throw Error(ErrorCode::SingularJacobian, "sens_ift: state Jacobian of the residual system is singular");
    SensitivityMatrix m;
    double out[2][2];
    for (std::size_t c = 0; c < 2; ++c) {
        const double p0 = j.params[0][c], p1 = j.params[1][c];
        out[0][c] = -(a[1][1] * p0 - a[0][1] * p1) / det;
        out[1][c] = -(-a[1][0] * p0 + a[0][0] * p1) / det;
    }
    m.dxhat_dlambda = out[0][0];
    m.dxstar_dlambda = out[1][0];
    m.dxhat_dkappa = out[0][1];
    m.dxstar_dkappa = out[1][1];
    return m;
}

namespace {

// Central difference of the forward solution along one cost parameter.
struct Column {
    bool ok = false;
    double dxhat = 0.0;
    double dxstar = 0.0;
};

Column fd_column(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b, bool lambda_axis,
                 double h) {
    SolveOptions opts;
    opts.threads = 1;
    auto at = [&](double d) {
        CostParams c = costs;
        (lambda_axis ? c.lambda : c.kappa) += d;
        return forward_solve(c, r, b, t, opts).targets;
    };
    const auto p = at(h), m = at(-h);
    return {true, (p.x_hat - m.x_hat) / (2.0 * h), (p.x_star - m.x_star) / (2.0 * h)};
}

Column fd_column_adaptive(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b,
                          bool lambda_axis, const AdaptiveFdOptions& o) {
    const double scale = std::max(std::abs(lambda_axis ? costs.lambda : costs.kappa), 1.0);
    Column prev;
    for (double step = o.initial_step; step >= o.min_step * (1.0 - 1e-12); step /= 10.0) {
        Column cur;
        try {
            cur = fd_column(costs, t, r, b, lambda_axis, step * scale);
        } catch (const ForwardSolveFailedError&) {
            // The perturbed problem lost its nearby solution; try a smaller step.
        }
        if (cur.ok && prev.ok) {
            const double diff = std::hypot(cur.dxhat - prev.dxhat, cur.dxstar - prev.dxstar);
            if (diff <= o.agreement * std::hypot(cur.dxhat, cur.dxstar)) return cur;
        }
        if (cur.ok) prev = cur;
    }
    if (!prev.ok)
        throw ForwardSolveFailedError(std::numeric_limits<double>::infinity(),
                                      "sens_fd_adaptive: forward solve failed at every step size");
    return prev;
}

}  // namespace

SensitivityMatrix sens_fd(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b,
                          double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::PositiveStepRequired, "sens_fd: step must be > 0");
    const auto l = fd_column(costs, t, r, b, true, step * std::max(std::abs(costs.lambda), 1.0));
    const auto k = fd_column(costs, t, r, b, false, step * std::max(std::abs(costs.kappa), 1.0));
    return {l.dxhat, l.dxstar, k.dxhat, k.dxstar};
}

SensitivityMatrix sens_fd_adaptive(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b,
                                   const AdaptiveFdOptions& opts) {
    if (!(opts.initial_step > 0.0) || !(opts.min_step > 0.0) || !(opts.min_step <= opts.initial_step))
        throw Error(ErrorCode::PositiveStepRequired, "sens_fd_adaptive: need 0 < min_step <= initial_step");
    const auto l = fd_column_adaptive(costs, t, r, b, true, opts);
    const auto k = fd_column_adaptive(costs, t, r, b, false, opts);
    return {l.dxhat, l.dxstar, k.dxhat, k.dxstar};
}

namespace {

SensitivityMatrix minus(const SensitivityMatrix& a, const SensitivityMatrix& b) {
    return {a.dxhat_dlambda - b.dxhat_dlambda, a.dxstar_dlambda - b.dxstar_dlambda, a.dxhat_dkappa - b.dxhat_dkappa,
            a.dxstar_dkappa - b.dxstar_dkappa};
}

}  // namespace

double richardson_ratio(const CostParams& costs, const PolicyTargets& t, const RootPair& r, double b, double step) {
    const auto d1 = sens_fd(costs, t, r, b, step);
    const auto d2 = sens_fd(costs, t, r, b, step / 2.0);
    const auto d4 = sens_fd(costs, t, r, b, step / 4.0);
    return frobenius(minus(d1, d2)) / frobenius(minus(d2, d4));
}

double frobenius(const SensitivityMatrix& m) {
    return std::sqrt(m.dxhat_dlambda * m.dxhat_dlambda + m.dxstar_dlambda * m.dxstar_dlambda +
                     m.dxhat_dkappa * m.dxhat_dkappa + m.dxstar_dkappa * m.dxstar_dkappa);
}

double relative_difference(const SensitivityMatrix& a, const SensitivityMatrix& b) {
    const double scale = std::max(frobenius(a), frobenius(b));
    if (scale == 0.0) return 0.0;
    return frobenius(minus(a, b)) / scale;
}

}  // namespace costcal
