#include "costcal/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "detail.hpp"

namespace costcal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Coeffs2 {
    double a1;
    double a2;
};

// (a1, a2) from the first-order difference equation
//   a1 l1 z^{l1-1} + a2 l2 z^{l2-1} = b z / (x̂ x*)
// plus the closure. NaN on a singular combination.
Coeffs2 closure_coeffs(const PolicyTargets& t, const RootPair& r, double b, Closure closure) {
    const double z = t.x_hat - t.x_star;
    const double rhs = b * z / (t.x_hat * t.x_star);
    const double c1 = r.l1 * detail::zpow(t, r.l1 - 1.0);
    const double c2 = r.l2 * detail::zpow(t, r.l2 - 1.0);
    if (closure == Closure::EqualCoefficients) {
        const double den = c1 + c2;
        if (!(std::abs(den) >= 1e-300)) return {kNaN, kNaN};
        const double a = rhs / den;
        return {a, a};
    }
    if (!(std::abs(c2) >= 1e-300)) return {kNaN, kNaN};
    return {0.0, rhs / c2};
}

bool admissible(const PolicyTargets& t) {
    return std::isfinite(t.x_hat) && std::isfinite(t.x_star) && t.x_hat > 0.0 && t.x_hat < t.x_star;
}

double max_abs(const std::array<double, 2>& r) {
    if (!std::isfinite(r[0]) || !std::isfinite(r[1])) return std::numeric_limits<double>::infinity();
    return std::max(std::abs(r[0]), std::abs(r[1]));
}

using Mat2 = std::array<std::array<double, 2>, 2>;

double cond2(const Mat2& j) {
    const double a = j[0][0], b = j[0][1], c = j[1][0], d = j[1][1];
    const double s = a * a + b * b + c * c + d * d;
    const double det = std::abs(a * d - b * c);
    const double root = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
    const double smax2 = 0.5 * (s + root);
    const double smin2 = det * det / smax2;
    if (!(smin2 > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(smax2 / smin2);
}

struct NewtonRun {
    bool converged = false;
    PolicyTargets targets;
    double max_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::vector<double> history;
};

class Newton {
public:
    Newton(const CostParams& costs, const RootPair& roots, double b, Closure closure, const SolveOptions& opts)
        : costs_(costs), roots_(roots), b_(b), closure_(closure), opts_(opts) {}

    // Known roots (in log coordinates) to deflate away.
    void deflate(std::vector<std::array<double, 2>> known) { known_ = std::move(known); }

    std::array<double, 2> eval(double u, double v) const {
        auto r = reduced_residuals({std::exp(u), std::exp(v)}, costs_, roots_, b_, closure_);
        for (const auto& k : known_) {
            const double d2 = (u - k[0]) * (u - k[0]) + (v - k[1]) * (v - k[1]);
            const double m = 1.0 / d2 + 1.0;
            r[0] *= m;
            r[1] *= m;
        }
        return r;
    }

    // Jacobian in log coordinates (u, v) = (ln x̂, ln x*), so the step is relative in x.
    bool jacobian(double u, double v, Mat2& j) const {
        const double h = opts_.fd_step;
        const auto ru_p = eval(u + h, v), ru_m = eval(u - h, v);
        const auto rv_p = eval(u, v + h), rv_m = eval(u, v - h);
        for (int i = 0; i < 2; ++i) {
            j[i][0] = (ru_p[i] - ru_m[i]) / (2.0 * h);
            j[i][1] = (rv_p[i] - rv_m[i]) / (2.0 * h);
        }
        return std::isfinite(j[0][0] + j[0][1] + j[1][0] + j[1][1]);
    }

    NewtonRun run(PolicyTargets start) const {
        NewtonRun out;
        double u = std::log(start.x_hat), v = std::log(start.x_star);
        auto r = eval(u, v);
        double f = max_abs(r);
        out.history.push_back(f);
        int polish = 0;
        for (int it = 0; it < opts_.max_iterations; ++it) {
            out.iterations = it;
            if (f <= opts_.tolerance) {
                // Keep going while full steps still help; derivatives taken around
                // this point need better than the acceptance tolerance.
                if (++polish > 4) break;
            }
            Mat2 j;
            if (!jacobian(u, v, j)) break;
            const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
            const double du = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
            const double dv = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
            double t = 1.0;
            bool accepted = false;
            for (int k = 0; k <= opts_.max_halvings; ++k, t *= 0.5) {
                const double un = u + t * du, vn = v + t * dv;
                if (!(vn > un)) continue;
                const auto rn = eval(un, vn);
                const double fn = max_abs(rn);
                const bool armijo = f > opts_.tolerance ? fn <= (1.0 - 1e-4 * t) * f : fn < f;
                if (armijo) {
                    u = un;
                    v = vn;
                    r = rn;
                    f = fn;
                    out.history.push_back(f);
                    accepted = true;
                    break;
                }
                if (f <= opts_.tolerance) break;  // polishing: only the full step is tried
            }
            if (!accepted) break;
            out.iterations = it + 1;
        }
        out.targets = {std::exp(u), std::exp(v)};
        out.max_residual = f;
        out.converged = f <= opts_.tolerance && admissible(out.targets);
        return out;
    }

    Mat2 jacobian_x(const PolicyTargets& t) const {
        Mat2 j{};
        jacobian(std::log(t.x_hat), std::log(t.x_star), j);
        for (int i = 0; i < 2; ++i) {
            j[i][0] /= t.x_hat;
            j[i][1] /= t.x_star;
        }
        return j;
    }

private:
    CostParams costs_;
    RootPair roots_;
    double b_;
    Closure closure_;
    SolveOptions opts_;
    std::vector<std::array<double, 2>> known_;
};

bool same_root(const PolicyTargets& p, const PolicyTargets& q, double rel) {
    return std::abs(p.x_hat - q.x_hat) <= rel * std::max(p.x_hat, q.x_hat) &&
           std::abs(p.x_star - q.x_star) <= rel * std::max(p.x_star, q.x_star);
}

std::string describe(const std::vector<ForwardSolution>& sols) {
    std::ostringstream os;
    os.precision(10);
    for (std::size_t i = 0; i < sols.size(); ++i)
        os << (i ? ", " : "") << "(x_hat=" << sols[i].targets.x_hat << ", x_star=" << sols[i].targets.x_star << ")";
    return os.str();
}

}  // namespace

std::array<double, 3> boundary_residuals(double a1, double a2, double b, const RootPair& r, const PolicyTargets& t,
                                         const CostParams& costs) {
    const double inv = 1.0 / (1.0 + costs.lambda);
    auto dphi = [&](double x) {
        return a1 * r.l1 * std::pow(x, r.l1 - 1.0) + a2 * r.l2 * std::pow(x, r.l2 - 1.0) + b / x;
    };
    const double jump = a1 * (std::pow(t.x_star, r.l1) - std::pow(t.x_hat, r.l1)) +
                        a2 * (std::pow(t.x_star, r.l2) - std::pow(t.x_hat, r.l2));
    return {dphi(t.x_hat) - inv, dphi(t.x_star) - inv,
            (t.x_star - t.x_hat - costs.kappa) * inv + b * std::log(t.x_hat / t.x_star) - jump};
}

std::array<double, 2> reduced_residuals(const PolicyTargets& t, const CostParams& costs, const RootPair& r, double b,
                                        Closure closure) {
    if (!admissible(t) || !(costs.lambda > -1.0)) return {kNaN, kNaN};
    const auto c = closure_coeffs(t, r, b, closure);
    const auto full = boundary_residuals(c.a1, c.a2, b, r, t, costs);
    return {full[0], full[2]};
}

ForwardSolution forward_solve_case1(const CostParams& costs, const RootPair& roots, double b,
                                    const std::optional<PolicyTargets>& init, Closure closure,
                                    const std::optional<PowerCoeffs>& reference, const SolveOptions& opts) {
    validate_costs(costs);
    if (init) validate_targets(*init);
    const Newton newton(costs, roots, b, closure, opts);

    std::vector<PolicyTargets> starts;
    if (init) {
        starts.push_back(*init);
    } else {
        if (opts.grid_points < 2 || !(opts.grid_lo > 0.0) || !(opts.grid_hi > opts.grid_lo))
            throw Error(ErrorCode::InvalidGrid, "forward_solve multistart grid needs >= 2 points in 0 < lo < hi");
        std::vector<double> g(static_cast<std::size_t>(opts.grid_points));
        const double step = std::log(opts.grid_hi / opts.grid_lo) / (opts.grid_points - 1);
        for (int k = 0; k < opts.grid_points; ++k) g[static_cast<std::size_t>(k)] = opts.grid_lo * std::exp(step * k);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = i + 1; j < g.size(); ++j) starts.push_back({g[i], g[j]});
    }

    std::vector<NewtonRun> runs(starts.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min<std::size_t>(starts.size(), opts.threads > 0 ? static_cast<std::size_t>(opts.threads) : hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < starts.size(); ++i) runs[i] = newton.run(starts[i]);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < starts.size(); i += workers) runs[i] = newton.run(starts[i]);
            });
        for (auto& th : pool) th.join();
    }

    // Deflation rounds: roots already found are divided out of the residual and
    // the grid is rerun, so a root whose basin no grid start lies in can still
    // be reached. Each new root is polished on the plain residual.
    if (!init) {
        for (int round = 0; round < opts.deflation_rounds; ++round) {
            std::vector<std::array<double, 2>> known;
            for (const auto& run : runs)
                if (run.converged) {
                    const std::array<double, 2> k{std::log(run.targets.x_hat), std::log(run.targets.x_star)};
                    const bool dup = std::any_of(known.begin(), known.end(), [&](const auto& q) {
                        return std::abs(q[0] - k[0]) <= opts.distinct_rel && std::abs(q[1] - k[1]) <= opts.distinct_rel;
                    });
                    if (!dup) known.push_back(k);
                }
            if (known.empty()) break;
            Newton deflated(costs, roots, b, closure, opts);
            deflated.deflate(known);
            std::vector<NewtonRun> fresh;
            for (const auto& st : starts) {
                const auto d = deflated.run(st);
                if (!d.converged) continue;
                auto polished = newton.run(d.targets);
                if (!polished.converged) continue;
                const bool seen = std::any_of(runs.begin(), runs.end(), [&](const NewtonRun& q) {
                    return q.converged && same_root(q.targets, polished.targets, opts.distinct_rel);
                }) || std::any_of(fresh.begin(), fresh.end(), [&](const NewtonRun& q) {
                    return same_root(q.targets, polished.targets, opts.distinct_rel);
                });
                if (!seen) fresh.push_back(std::move(polished));
            }
            if (fresh.empty()) break;
            runs.insert(runs.end(), fresh.begin(), fresh.end());
        }
    }

    double best_failed = std::numeric_limits<double>::infinity();
    std::vector<NewtonRun> ok;
    for (const auto& run : runs) {
        if (run.converged)
            ok.push_back(run);
        else
            best_failed = std::min(best_failed, run.max_residual);
    }
    if (ok.empty()) {
        std::ostringstream os;
        os << "forward_solve: no start converged to max|R| <= " << opts.tolerance << " (best " << best_failed
           << ", " << starts.size() << " starts)";
        throw ForwardSolveFailedError(best_failed, os.str());
    }

    // Lowest residual first, ties broken lexicographically, so cluster
    // representatives do not depend on start order.
    std::sort(ok.begin(), ok.end(), [](const NewtonRun& p, const NewtonRun& q) {
        if (p.max_residual != q.max_residual) return p.max_residual < q.max_residual;
        if (p.targets.x_hat != q.targets.x_hat) return p.targets.x_hat < q.targets.x_hat;
        return p.targets.x_star < q.targets.x_star;
    });
    std::vector<NewtonRun> distinct;
    for (const auto& run : ok) {
        const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const NewtonRun& d) {
            return same_root(d.targets, run.targets, opts.distinct_rel);
        });
        if (!seen) distinct.push_back(run);
    }

    std::vector<ForwardSolution> sols;
    for (const auto& run : distinct) {
        ForwardSolution s;
        s.targets = run.targets;
        const auto c = closure_coeffs(run.targets, roots, b, closure);
        s.a1 = c.a1;
        s.a2 = c.a2;
        s.residuals = boundary_residuals(c.a1, c.a2, b, roots, run.targets, costs);
        s.max_residual = std::max({std::abs(s.residuals[0]), std::abs(s.residuals[1]), std::abs(s.residuals[2])});
        s.newton_iterations = run.iterations;
        s.residual_history = run.history;
        s.condition_number = cond2(newton.jacobian_x(run.targets));
        if (reference) {
            const bool holds = closure == Closure::EqualCoefficients
                                   ? std::abs(reference->a1 - reference->a2) <=
                                         1e-9 * std::max({1.0, std::abs(reference->a1), std::abs(reference->a2)})
                                   : std::abs(reference->a1) <= 1e-12;
            if (!holds) s.warnings.push_back(Warning::ClosureMismatch);
        }
        sols.push_back(std::move(s));
    }
    if (sols.size() > 1) {
        std::sort(sols.begin(), sols.end(), [](const ForwardSolution& p, const ForwardSolution& q) {
            if (p.targets.x_hat != q.targets.x_hat) return p.targets.x_hat < q.targets.x_hat;
            return p.targets.x_star < q.targets.x_star;
        });
        const std::string msg = "forward_solve: " + std::to_string(sols.size()) + " distinct solutions " +
                                describe(sols) + "; pass an initial guess to select one";
        throw MultipleSolutionsError(std::move(sols), msg);
    }
    return sols.front();
}

ForwardSolution forward_solve(const CostParams& costs, const RootPair& roots, double b,
                              const std::optional<PolicyTargets>& init, const SolveOptions& opts) {
    return forward_solve_case1(costs, roots, b, init, Closure::EqualCoefficients, std::nullopt, opts);
}

}  // namespace costcal
