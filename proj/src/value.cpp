#include "costcal/value.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detail.hpp"

namespace costcal {

namespace {

void check_design_inputs(const PolicyTargets& t, const char* op) {
    if (t.x_hat == t.x_star)
        throw Error(ErrorCode::DegenerateTargets, std::string(op) + ": x_hat equals x_star, every z^m vanishes");
    validate_targets(t);
}

}  // namespace

LogCoeffs coeff_b_c(const ValidatedModel& model) {
    const double b = model.epsilon() / model.delta();
    const double jump = levy_sum(model, [](double g) { return std::log1p(g) - g; });
    const double bracket = model.gamma_drift() - 0.5 * model.sigma() * model.sigma() + jump;
    return {b, b / model.delta() * bracket};
}

PowerCoeffs coeffs_case1(const PolicyTargets& t, double lambda, const RootPair& r, double b) {
    check_design_inputs(t, "coeffs_case1");
    if (!(lambda > -1.0)) throw Error(ErrorCode::InvalidCosts, "coeffs_case1: lambda must be > -1");
    using detail::zpow;
    const double xh = t.x_hat;
    const double inv = 1.0 / (1.0 + lambda);
    const double prod = t.x_hat * t.x_star;
    const double den = std::pow(xh, r.l2 - 1.0) * zpow(t, r.l1 - 1.0) - std::pow(xh, r.l1 - 1.0) * zpow(t, r.l2 - 1.0);
    if (!(std::abs(den) >= 1e-14))
        throw Error(ErrorCode::SingularSystem, "coeffs_case1: first-order system determinant below 1e-14");
    const double a1 = (b * zpow(t, r.l2) / prod - zpow(t, r.l2 - 1.0) * inv) / (r.l1 * den);
    const double a2 = (b * zpow(t, r.l1) / prod - zpow(t, r.l1 - 1.0) * inv) / (-r.l2 * den);
    return {a1, a2};
}

double coeff_case2(const PolicyTargets& t, const RootPair& r, double b) {
    check_design_inputs(t, "coeff_case2");
    using detail::zpow;
    const double den = r.l1 * zpow(t, r.l1 - 1.0) + r.l2 * zpow(t, r.l2 - 1.0);
    if (!(std::abs(den) >= 1e-14))
        throw Error(ErrorCode::SingularSystem, "coeff_case2: l1 z^{l1-1} + l2 z^{l2-1} below 1e-14");
    return b * (t.x_hat - t.x_star) / (t.x_star * t.x_hat * den);
}

double phi(const ValueCoeffs& k, const RootPair& r, double x) {
    return k.a1 * std::pow(x, r.l1) + k.a2 * std::pow(x, r.l2) + k.b * std::log(x) + k.c;
}

double phi_prime(const ValueCoeffs& k, const RootPair& r, double x) {
    return k.a1 * r.l1 * std::pow(x, r.l1 - 1.0) + k.a2 * r.l2 * std::pow(x, r.l2 - 1.0) + k.b / x;
}

double phi_second(const ValueCoeffs& k, const RootPair& r, double x) {
    return k.a1 * r.l1 * (r.l1 - 1.0) * std::pow(x, r.l1 - 2.0) + k.a2 * r.l2 * (r.l2 - 1.0) * std::pow(x, r.l2 - 2.0) -
           k.b / (x * x);
}

double phi(const ValueCoeffs& k, const RootPair& r, double x, double s, double delta) {
    if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveState, "phi: state x must be > 0");
    return std::exp(-delta * s) * phi(k, r, x);
}

double generator_residual(const ValueCoeffs& k, const RootPair& r, const ValidatedModel& m, double x) {
    const double v = phi(k, r, x);
    const double d1 = phi_prime(k, r, x);
    const double d2 = phi_second(k, r, x);
    const double jump = levy_sum(m, [&](double g) { return phi(k, r, x * (1.0 + g)) - v - x * g * d1; });
    return -m.delta() * v + m.gamma_drift() * x * d1 + 0.5 * m.sigma() * m.sigma() * x * x * d2 + jump +
           m.epsilon() * std::log(x);
}

// ---------------------------------------------------------------------------

InterventionOperator::InterventionOperator(const ValueCoeffs& coeffs, const RootPair& roots, const CostParams& costs,
                                           PostStateDomain domain, int scan_points)
    : coeffs_(coeffs), roots_(roots), costs_(costs), domain_(domain), scan_points_(std::max(scan_points, 8)) {
    validate_costs(costs);
    if (!(domain.lower > 0.0) || !(domain.upper > domain.lower))
        throw Error(ErrorCode::InvalidGrid, "intervention domain requires 0 < lower < upper");
    if (std::isfinite(domain.upper)) build_candidates(domain.lower, domain.upper, scan_points_);
}

double InterventionOperator::objective(double y) const { return phi(coeffs_, roots_, y) - y / (1.0 + costs_.lambda); }

void InterventionOperator::build_candidates(double lo, double hi, int n) {
    const double slope = 1.0 / (1.0 + costs_.lambda);
    auto foc = [&](double y) { return phi_prime(coeffs_, roots_, y) - slope; };

    std::vector<Candidate> pts;
    pts.reserve(static_cast<std::size_t>(n) + 8);
    stationary_.clear();
    const double step = std::log(hi / lo) / (n - 1);
    double y_prev = lo;
    double f_prev = foc(lo);
    pts.push_back({lo, objective(lo)});
    for (int i = 1; i < n; ++i) {
        const double y = (i == n - 1) ? hi : lo * std::exp(step * i);
        const double f = foc(y);
        if ((f < 0.0) != (f_prev < 0.0)) {
            const double ftol = 1e-15 * std::max(1.0, slope);
            const double root = detail::bracketed_root(foc, y_prev, y, ftol);
            stationary_.push_back(root);
            pts.push_back({root, objective(root)});
        }
        pts.push_back({y, objective(y)});
        y_prev = y;
        f_prev = f;
    }
    std::sort(pts.begin(), pts.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
    prefix_best_.clear();
    prefix_y_.clear();
    Candidate best{pts.front().y, -std::numeric_limits<double>::infinity()};
    for (const auto& p : pts) {
        if (p.value > best.value) best = p;
        prefix_best_.push_back(best);
        prefix_y_.push_back(p.y);
    }
}

std::optional<InterventionResult> InterventionOperator::eval_with(double x,
                                                                  const std::vector<Candidate>& /*unused*/) const {
    const double hi = std::min(x - costs_.kappa, domain_.upper);
    if (!(hi >= domain_.lower)) return std::nullopt;
    const auto it = std::upper_bound(prefix_y_.begin(), prefix_y_.end(), hi);
    Candidate best{hi, objective(hi)};
    if (it != prefix_y_.begin()) {
        const auto& c = prefix_best_[static_cast<std::size_t>(std::distance(prefix_y_.begin(), it)) - 1];
        if (c.value > best.value) best = c;
    }
    const double shift = (x - costs_.kappa) / (1.0 + costs_.lambda);
    return InterventionResult{best.value + shift, (x - costs_.kappa - best.y) / (1.0 + costs_.lambda), best.y};
}

std::optional<InterventionResult> InterventionOperator::try_eval(double x) const {
    if (std::isfinite(domain_.upper)) return eval_with(x, prefix_best_);
    const double hi = x - costs_.kappa;
    if (!(hi >= domain_.lower)) return std::nullopt;
    if (hi == domain_.lower) return InterventionResult{objective(hi) + (x - costs_.kappa) / (1.0 + costs_.lambda), 0.0, hi};
    InterventionOperator local(coeffs_, roots_, costs_, PostStateDomain{domain_.lower, hi}, scan_points_);
    return local.try_eval(x);
}

InterventionResult InterventionOperator::operator()(double x) const {
    auto res = try_eval(x);
    if (!res)
        throw Error(ErrorCode::EmptyFeasibleSet,
                    "intervention at x=" + std::to_string(x) + ": no post-state x - kappa - (1+lambda) z >= " +
                        std::to_string(domain_.lower) + " with z >= 0");
    return *res;
}

InterventionResult intervention_value(const ValueCoeffs& coeffs, const RootPair& roots, const CostParams& costs,
                                      double x, PostStateDomain domain) {
    if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveState, "intervention_value: state x must be > 0");
    return InterventionOperator(coeffs, roots, costs, domain)(x);
}

// ---------------------------------------------------------------------------

QviReport qvi_check(const ValueCoeffs& coeffs, const RootPair& roots, const ValidatedModel& model,
                    const CostParams& costs, const PolicyTargets& targets, const QviGridSpec& spec) {
    validate_targets(targets);
    validate_costs(costs);
    const double x_min = spec.x_min > 0.0 ? spec.x_min : 0.1 * targets.x_hat;
    const double x_max = spec.x_max > 0.0 ? spec.x_max : 2.0 * targets.x_star;
    if (spec.points < 3 || !(x_min < targets.x_hat) || !(targets.x_star < x_max))
        throw Error(ErrorCode::InvalidGrid, "qvi grid needs >= 3 points and x_min < x_hat < x_star < x_max");

    const int n = spec.points;
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double step = std::log(x_max / x_min) / (n - 1);
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = x_min * std::exp(step * i);
    xs.back() = x_max;
    // Put the threshold itself on the grid.
    auto nearest = std::min_element(xs.begin(), xs.end(), [&](double a, double b) {
        return std::abs(std::log(a / targets.x_star)) < std::abs(std::log(b / targets.x_star));
    });
    *nearest = targets.x_star;

    const InterventionOperator op(coeffs, roots, costs, PostStateDomain{x_min, targets.x_star}, 4096);
    const double phi_hat = phi(coeffs, roots, targets.x_hat);
    const double inv = 1.0 / (1.0 + costs.lambda);

    QviReport rep;
    rep.tolerance = spec.tolerance;
    rep.window_lower = x_min;
    rep.singular_term_positive = coeffs.a1 > 0.0 && roots.l1 < 0.0;
    rep.min_margin_continuation = std::numeric_limits<double>::infinity();
    rep.grid.reserve(xs.size());
    for (double x : xs) {
        QviRow row;
        row.x = x;
        row.continuation = x < targets.x_star;
        row.phi = x <= targets.x_star ? phi(coeffs, roots, x) : phi_hat + (x - targets.x_hat - costs.kappa) * inv;
        const auto m = op.try_eval(x);
        row.m_phi = m ? m->m_value : -std::numeric_limits<double>::infinity();
        if (row.continuation) {
            row.residual = generator_residual(coeffs, roots, model, x);
            rep.max_abs_residual_continuation = std::max(rep.max_abs_residual_continuation, std::abs(row.residual));
            rep.min_margin_continuation = std::min(rep.min_margin_continuation, row.phi - row.m_phi);
        } else {
            row.residual = std::numeric_limits<double>::quiet_NaN();
            const double gap = m ? std::abs(row.phi - row.m_phi) : std::numeric_limits<double>::infinity();
            rep.max_gap_intervention = std::max(rep.max_gap_intervention, gap);
        }
        rep.grid.push_back(row);
    }
    rep.passed = rep.max_abs_residual_continuation <= spec.tolerance && rep.max_gap_intervention <= spec.tolerance &&
                 rep.min_margin_continuation >= -spec.tolerance;
    return rep;
}

}  // namespace costcal
