#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "costcal/cli.hpp"
#include "costcal/design.hpp"
#include "costcal/roots.hpp"
#include "costcal/sens.hpp"
#include "costcal/sim.hpp"
#include "costcal/solve.hpp"
#include "costcal/value.hpp"

namespace costcal::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Flags {
    std::string config;
    std::string csv;
    std::optional<double> x_hat, x_star, lambda, kappa, fixed_lambda;
    std::optional<double> init_x_hat, init_x_star;
    double h1 = 0.0, h_minus1 = 0.0;
    std::optional<double> trigger, after;
    bool multistart = false;
    std::string closure = "equal";
    int points = 2048;
    std::optional<std::int64_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, t_max, x0;
    std::optional<int> threads;
    double span = 0.2;
    int n = 9;
    bool principal = false;
    double fd_step = 1e-4;
};

// Everything a subcommand needs once the config and flags are merged.
struct Context {
    Config cfg;
    Flags flags;
    std::optional<ValidatedModel> model;
    RootPair roots;
    LogCoeffs log;

    const ValidatedModel& m() const { return *model; }

    PolicyTargets targets() const {
        PolicyTargets t;
        if (cfg.targets) t = *cfg.targets;
        if (flags.x_hat) t.x_hat = *flags.x_hat;
        if (flags.x_star) t.x_star = *flags.x_star;
        if (!cfg.targets && !(flags.x_hat && flags.x_star))
            throw Error(ErrorCode::InvalidTargets, "targets missing: give a targets section or --x-hat and --x-star");
        validate_targets(t);
        return t;
    }

    bool has_costs() const { return cfg.costs || (flags.lambda && flags.kappa); }

    CostParams explicit_costs() const {
        CostParams c;
        if (cfg.costs) c = *cfg.costs;
        if (flags.lambda) c.lambda = *flags.lambda;
        if (flags.kappa) c.kappa = *flags.kappa;
        if (!cfg.costs && !(flags.lambda && flags.kappa))
            throw Error(ErrorCode::InvalidCosts, "costs missing: give a costs section or --lambda and --kappa");
        validate_costs(c);
        return c;
    }

    // Given costs when present, otherwise the Case II calibration of the targets.
    CostParams costs_or_design() const {
        if (has_costs()) return explicit_costs();
        return design_case2(targets(), roots, log.b);
    }

    SimConfig sim() const {
        SimConfig s = cfg.sim;
        if (flags.paths) s.paths = *flags.paths;
        if (flags.seed) s.seed = *flags.seed;
        if (flags.dt) s.dt = *flags.dt;
        if (flags.t_max) s.t_max = *flags.t_max;
        if (flags.x0) s.x0 = *flags.x0;
        if (flags.threads) s.threads = *flags.threads;
        validate_sim_config(s);
        return s;
    }
};

Json to_json(const PolicyTargets& t) { return Json{{"x_hat", t.x_hat}, {"x_star", t.x_star}}; }
Json to_json(const CostParams& c) { return Json{{"lambda", c.lambda}, {"kappa", c.kappa}}; }
Json to_json(const Policy& p) { return Json{{"trigger", p.trigger}, {"after", p.after}}; }

Json to_json(const PayoffEstimate& e) {
    return Json{{"mean", e.mean},
                {"std_error", e.std_error},
                {"paths", e.paths_used},
                {"bankruptcies", e.bankruptcies},
                {"mean_purchases", e.mean_purchases},
                {"tail_bound", e.tail_bound}};
}

Json to_json(const SensitivityMatrix& s) {
    return Json{{"dxhat_dlambda", s.dxhat_dlambda},
                {"dxstar_dlambda", s.dxstar_dlambda},
                {"dxhat_dkappa", s.dxhat_dkappa},
                {"dxstar_dkappa", s.dxstar_dkappa}};
}

Json warnings_json(const std::vector<Warning>& ws) {
    Json arr = Json::array();
    for (auto w : ws) arr.push_back(std::string(to_string(w)));
    return arr;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

class CsvSink {
public:
    explicit CsvSink(const std::string& path) : path_(path) {}
    bool enabled() const { return !path_.empty(); }
    void write(const std::string& header, const std::vector<std::vector<std::string>>& rows) const {
        if (!enabled()) return;
        std::ofstream out(path_);
        if (!out) throw Error(ErrorCode::Io, "cannot open CSV output '" + path_ + "'");
        out << header << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
            out << '\n';
        }
        if (!out) throw Error(ErrorCode::Io, "error writing CSV output '" + path_ + "'");
    }

private:
    std::string path_;
};

Json cmd_roots(const Context& c, const CsvSink& csv) {
    Json j{{"l1", c.roots.l1},
           {"l2", c.roots.l2},
           {"h_l1", char_fn(c.m(), c.roots.l1)},
           {"h_l2", char_fn(c.m(), c.roots.l2)},
           {"jumps", c.m().has_jumps()}};
    csv.write("l1,l2,h_l1,h_l2", {{num(c.roots.l1), num(c.roots.l2), num(j["h_l1"].get<double>()),
                                   num(j["h_l2"].get<double>())}});
    return j;
}

Json cmd_coeffs(const Context& c, const CsvSink& csv) {
    const auto t = c.targets();
    const ValueCoeffs k = c.flags.fixed_lambda ? case1_value_coeffs(t, *c.flags.fixed_lambda, c.roots, c.log)
                                               : case2_value_coeffs(t, c.roots, c.log);
    csv.write("a1,a2,b,c", {{num(k.a1), num(k.a2), num(k.b), num(k.c)}});
    return Json{{"mode", k.mode == CoeffMode::CaseI ? "case1" : "case2"},
                {"a1", k.a1},
                {"a2", k.a2},
                {"b", k.b},
                {"c", k.c}};
}

Json design_json(const PolicyTargets& t, const CostParams& costs, const char* mode) {
    const auto rep = feasibility_report(t, costs);
    return Json{{"mode", mode},
                {"targets", to_json(t)},
                {"lambda", costs.lambda},
                {"kappa", costs.kappa},
                {"z_hat", rep.z_hat},
                {"warnings", warnings_json(rep.warnings)}};
}

Json cmd_design(const Context& c, const CsvSink& csv) {
    const auto t = c.targets();
    CostParams costs;
    if (c.flags.fixed_lambda) {
        validate_costs({*c.flags.fixed_lambda, 0.0});
        costs = {*c.flags.fixed_lambda, design_case1(t, *c.flags.fixed_lambda, c.roots, c.log.b)};
    } else {
        costs = design_case2(t, c.roots, c.log.b);
    }
    Json j = design_json(t, costs, c.flags.fixed_lambda ? "case1" : "case2");
    csv.write("x_hat,x_star,lambda,kappa,z_hat",
              {{num(t.x_hat), num(t.x_star), num(costs.lambda), num(costs.kappa), num(j["z_hat"].get<double>())}});
    return j;
}

std::optional<PolicyTargets> initial_guess(const Context& c) {
    if (c.flags.init_x_hat || c.flags.init_x_star) {
        if (!(c.flags.init_x_hat && c.flags.init_x_star))
            throw Error(ErrorCode::InvalidTargets, "--init-x-hat and --init-x-star must be given together");
        return PolicyTargets{*c.flags.init_x_hat, *c.flags.init_x_star};
    }
    if (c.flags.multistart) return std::nullopt;
    if (c.cfg.targets) return *c.cfg.targets;
    return std::nullopt;
}

Json cmd_solve(const Context& c, const CsvSink& csv) {
    const auto costs = c.explicit_costs();
    Closure closure;
    if (c.flags.closure == "equal")
        closure = Closure::EqualCoefficients;
    else if (c.flags.closure == "no-singular")
        closure = Closure::NoSingularTerm;
    else
        throw Error(ErrorCode::InvalidConfig, "--closure must be 'equal' or 'no-singular'");
    const auto sol = forward_solve_case1(costs, c.roots, c.log.b, initial_guess(c), closure);
    csv.write("x_hat,x_star,r1,r2,r3,newton_iters,condition_number",
              {{num(sol.targets.x_hat), num(sol.targets.x_star), num(sol.residuals[0]), num(sol.residuals[1]),
                num(sol.residuals[2]), std::to_string(sol.newton_iterations), num(sol.condition_number)}});
    return Json{{"x_hat", sol.targets.x_hat},
                {"x_star", sol.targets.x_star},
                {"closure", c.flags.closure},
                {"a1", sol.a1},
                {"a2", sol.a2},
                {"residuals", Json::array({sol.residuals[0], sol.residuals[1], sol.residuals[2]})},
                {"newton_iters", sol.newton_iterations},
                {"condition_number", sol.condition_number},
                {"warnings", warnings_json(sol.warnings)}};
}

Json cmd_retarget(const Context& c, const CsvSink& csv) {
    const auto costs0 = c.explicit_costs();
    const auto current = initial_guess(c);
    const auto next = retarget(costs0, {c.flags.h1, c.flags.h_minus1}, c.roots, c.log.b, current);
    const auto now = forward_solve(costs0, c.roots, c.log.b, current);
    const PolicyTargets shifted{now.targets.x_hat + c.flags.h_minus1, now.targets.x_star + c.flags.h1};
    Json j = design_json(shifted, next, "case2");
    j["previous_targets"] = to_json(now.targets);
    csv.write("x_hat,x_star,lambda,kappa", {{num(shifted.x_hat), num(shifted.x_star), num(next.lambda), num(next.kappa)}});
    return j;
}

Json cmd_sens(const Context& c, const CsvSink& csv) {
    const auto costs = c.costs_or_design();
    const auto sol = forward_solve(costs, c.roots, c.log.b, c.targets());
    const auto& t = sol.targets;
    const auto ift = sens_ift(costs, t, c.roots, c.log.b);
    const auto fd = sens_fd(costs, t, c.roots, c.log.b, c.flags.fd_step);
    const auto fda = sens_fd_adaptive(costs, t, c.roots, c.log.b);
    Json printed = nullptr;
    Json diff{{"fd_vs_ift", relative_difference(fd, ift)}, {"fd_adaptive_vs_ift", relative_difference(fda, ift)}};
    std::optional<SensitivityMatrix> pr;
    try {
        pr = sens_printed(t, c.roots, c.log.b);
        printed = to_json(*pr);
        diff["printed_vs_ift"] = relative_difference(*pr, ift);
        diff["printed_vs_fd"] = relative_difference(*pr, fd);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SingularSensitivity) throw;
        printed = Json{{"error", e.what()}};
    }
    const auto f = printed_f_values(t, c.roots, c.log.b);
    std::vector<std::vector<std::string>> rows;
    auto row = [&](const char* name, const SensitivityMatrix& s) {
        rows.push_back({name, num(s.dxhat_dlambda), num(s.dxstar_dlambda), num(s.dxhat_dkappa), num(s.dxstar_dkappa)});
    };
    row("ift", ift);
    row("fd", fd);
    row("fd_adaptive", fda);
    if (pr) row("printed", *pr);
    csv.write("method,dxhat_dlambda,dxstar_dlambda,dxhat_dkappa,dxstar_dkappa", rows);
    return Json{{"targets", to_json(t)},
                {"costs", to_json(costs)},
                {"ift", to_json(ift)},
                {"fd", to_json(fd)},
                {"fd_adaptive", to_json(fda)},
                {"printed", printed},
                {"printed_f", Json::array({f[0], f[1], f[2], f[3]})},
                {"relative_difference", diff},
                {"richardson_ratio", richardson_ratio(costs, t, c.roots, c.log.b)}};
}

Json cmd_verify_qvi(const Context& c, const CsvSink& csv) {
    const auto t = c.targets();
    CostParams costs;
    ValueCoeffs k;
    if (c.flags.fixed_lambda) {
        validate_costs({*c.flags.fixed_lambda, 0.0});
        costs = {*c.flags.fixed_lambda, design_case1(t, *c.flags.fixed_lambda, c.roots, c.log.b)};
        k = case1_value_coeffs(t, costs.lambda, c.roots, c.log);
    } else {
        costs = c.has_costs() ? c.explicit_costs() : design_case2(t, c.roots, c.log.b);
        k = case2_value_coeffs(t, c.roots, c.log);
    }
    QviGridSpec spec;
    spec.points = c.flags.points;
    const auto rep = qvi_check(k, c.roots, c.m(), costs, t, spec);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rep.grid)
        rows.push_back({num(r.x), num(r.phi), num(r.m_phi), num(r.residual), r.continuation ? "1" : "0"});
    csv.write("x,phi,m_phi,residual,continuation", rows);
    return Json{{"targets", to_json(t)},
                {"costs", to_json(costs)},
                {"points", static_cast<int>(rep.grid.size())},
                {"window_lower", rep.window_lower},
                {"max_abs_residual_continuation", rep.max_abs_residual_continuation},
                {"max_gap_intervention", rep.max_gap_intervention},
                {"min_margin_continuation", rep.min_margin_continuation},
                {"tolerance", rep.tolerance},
                {"singular_term_positive", rep.singular_term_positive},
                {"passed", rep.passed}};
}

Policy chosen_policy(const Context& c) {
    if (c.flags.trigger || c.flags.after) {
        if (!(c.flags.trigger && c.flags.after))
            throw Error(ErrorCode::InvalidPolicy, "--trigger and --after must be given together");
        return {*c.flags.trigger, *c.flags.after};
    }
    return policy_from_targets(c.targets());
}

Json sim_json(const SimConfig& s) {
    return Json{{"dt", s.dt}, {"t_max", s.t_max}, {"paths", s.paths}, {"seed", s.seed}, {"x0", s.x0}};
}

Json cmd_simulate(const Context& c, const CsvSink& csv) {
    const auto costs = c.costs_or_design();
    const auto policy = chosen_policy(c);
    const auto s = c.sim();
    const auto agent = simulate_agent(c.m(), costs, policy, s);
    Json j{{"policy", to_json(policy)}, {"costs", to_json(costs)}, {"sim", sim_json(s)}, {"agent", to_json(agent)}};
    std::vector<std::vector<std::string>> rows{{"agent", num(policy.trigger), num(policy.after), num(agent.mean),
                                                num(agent.std_error), std::to_string(agent.bankruptcies)}};
    if (c.flags.principal) {
        const auto pr = simulate_principal(c.m(), costs, policy, c.cfg.principal, s);
        j["principal"] = to_json(pr);
        rows.push_back({"principal", num(policy.trigger), num(policy.after), num(pr.mean), num(pr.std_error),
                        std::to_string(pr.bankruptcies)});
    }
    csv.write("payoff,trigger,after,mean,stderr,bankruptcies", rows);
    return j;
}

Json cmd_grid(const Context& c, const CsvSink& csv) {
    const auto t = c.targets();
    const auto costs = c.costs_or_design();
    const auto res = policy_grid(c.m(), costs, policy_neighbourhood(t, c.flags.span, c.flags.n), c.sim());
    Json surface = Json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : res.entries) {
        Json row = to_json(e.policy);
        row["estimate"] = to_json(e.estimate);
        surface.push_back(row);
        rows.push_back({num(e.policy.trigger), num(e.policy.after), num(e.estimate.mean), num(e.estimate.std_error),
                        std::to_string(e.estimate.bankruptcies)});
    }
    csv.write("trigger,after,mean,stderr,bankruptcies", rows);
    return Json{{"costs", to_json(costs)},
                {"sim", sim_json(c.sim())},
                {"argmax", to_json(res.entries[res.argmax].policy)},
                {"surface", surface}};
}

Json cmd_principal_search(const Context& c, const CsvSink& csv) {
    const auto t = c.targets();
    const auto res = principal_target_search(c.m(), target_neighbourhood(t, c.flags.span, c.flags.n),
                                             c.cfg.principal, c.sim(), c.roots, c.log.b);
    Json surface = Json::array();
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : res.entries) {
        Json row = to_json(e.targets);
        if (e.costs) row["costs"] = to_json(*e.costs);
        if (e.estimate) row["estimate"] = to_json(*e.estimate);
        if (!e.error.empty()) row["error"] = e.error;
        surface.push_back(row);
        rows.push_back({num(e.targets.x_hat), num(e.targets.x_star), e.costs ? num(e.costs->lambda) : "",
                        e.costs ? num(e.costs->kappa) : "", e.estimate ? num(e.estimate->mean) : "",
                        e.estimate ? num(e.estimate->std_error) : "",
                        e.estimate ? std::to_string(e.estimate->bankruptcies) : "", "\"" + e.error + "\""});
    }
    csv.write("x_hat,x_star,lambda,kappa,mean,stderr,bankruptcies,error", rows);
    Json j{{"sim", sim_json(c.sim())}, {"surface", surface}};
    if (res.best) {
        const auto& b = res.entries[*res.best];
        j["best"] = Json{{"targets", to_json(b.targets)}, {"costs", to_json(*b.costs)}, {"estimate", to_json(*b.estimate)}};
    } else {
        j["best"] = nullptr;
    }
    return j;
}

int exit_code(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::Validation: return 1;
        case ErrorCategory::Solver: return 2;
        case ErrorCategory::Io: return 3;
    }
    return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transaction-cost calibration for impulse-controlled liquidity"};
    app.name("costcal");
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;
    app.add_option("--config", f.config, "JSON config file")->required();
    app.add_option("--csv", f.csv, "also write a CSV table to this path");

    auto targets_opts = [&](CLI::App* s) {
        s->add_option("--x-hat", f.x_hat, "post-purchase level (overrides targets.x_hat)");
        s->add_option("--x-star", f.x_star, "intervention threshold (overrides targets.x_star)");
    };
    auto cost_opts = [&](CLI::App* s) {
        s->add_option("--lambda", f.lambda, "proportional cost (overrides costs.lambda)");
        s->add_option("--kappa", f.kappa, "fixed cost (overrides costs.kappa)");
    };
    auto init_opts = [&](CLI::App* s) {
        s->add_option("--init-x-hat", f.init_x_hat, "initial guess for x_hat");
        s->add_option("--init-x-star", f.init_x_star, "initial guess for x_star");
        s->add_flag("--multistart", f.multistart, "ignore config targets and search a grid of starts");
    };
    auto sim_opts = [&](CLI::App* s) {
        s->add_option("--paths", f.paths, "Monte Carlo paths");
        s->add_option("--seed", f.seed, "master seed");
        s->add_option("--dt", f.dt, "Euler step");
        s->add_option("--t-max", f.t_max, "horizon");
        s->add_option("--x0", f.x0, "initial liquidity");
        s->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    };
    auto grid_opts = [&](CLI::App* s) {
        s->add_option("--span", f.span, "relative half-width of the grid")->capture_default_str();
        s->add_option("--n", f.n, "points per axis")->capture_default_str();
    };

    using Handler = std::function<Json(const Context&, const CsvSink&)>;
    std::vector<std::pair<CLI::App*, Handler>> handlers;

    auto* roots = app.add_subcommand("roots", "roots l1 < 0 < l2 of h. CSV: l1,l2,h_l1,h_l2");
    handlers.emplace_back(roots, cmd_roots);

    auto* coeffs = app.add_subcommand("coeffs", "coefficients of phi. CSV: a1,a2,b,c");
    targets_opts(coeffs);
    coeffs->add_option("--fixed-lambda", f.fixed_lambda, "Case I with this proportional cost");
    handlers.emplace_back(coeffs, cmd_coeffs);

    auto* design = app.add_subcommand("design", "costs implementing the targets. CSV: x_hat,x_star,lambda,kappa,z_hat");
    targets_opts(design);
    design->add_option("--fixed-lambda", f.fixed_lambda, "Case I: keep lambda fixed, solve for kappa");
    handlers.emplace_back(design, cmd_design);

    auto* solve = app.add_subcommand(
        "solve", "agent's optimal policy under given costs. CSV: x_hat,x_star,r1,r2,r3,newton_iters,condition_number");
    cost_opts(solve);
    init_opts(solve);
    solve->add_option("--closure", f.closure, "equal (a1 = a2) or no-singular (a1 = 0)")->capture_default_str();
    handlers.emplace_back(solve, cmd_solve);

    auto* re = app.add_subcommand("retarget", "costs moving the induced policy by (h1, h-1). CSV: x_hat,x_star,lambda,kappa");
    cost_opts(re);
    init_opts(re);
    re->add_option("--h1", f.h1, "shift of the threshold x_star");
    re->add_option("--h-1", f.h_minus1, "shift of the post-purchase level x_hat");
    handlers.emplace_back(re, cmd_retarget);

    auto* sens = app.add_subcommand(
        "sens", "sensitivities of (x_hat, x_star) to (lambda, kappa). CSV: method,dxhat_dlambda,dxstar_dlambda,dxhat_dkappa,dxstar_dkappa");
    targets_opts(sens);
    cost_opts(sens);
    sens->add_option("--fd-step", f.fd_step, "relative finite-difference step")->capture_default_str();
    handlers.emplace_back(sens, cmd_sens);

    auto* qvi = app.add_subcommand("verify-qvi", "grid check of the QVI conditions. CSV: x,phi,m_phi,residual,continuation");
    targets_opts(qvi);
    cost_opts(qvi);
    qvi->add_option("--fixed-lambda", f.fixed_lambda, "verify the Case I calibration at this lambda");
    qvi->add_option("--points", f.points, "grid points")->capture_default_str();
    handlers.emplace_back(qvi, cmd_verify_qvi);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo payoff of one policy. CSV: payoff,trigger,after,mean,stderr,bankruptcies");
    targets_opts(sim);
    cost_opts(sim);
    sim_opts(sim);
    sim->add_option("--trigger", f.trigger, "policy trigger (default x_star)");
    sim->add_option("--after", f.after, "policy post-purchase level (default x_hat)");
    sim->add_flag("--principal", f.principal, "also estimate the Principal payoff");
    handlers.emplace_back(sim, cmd_simulate);

    auto* grid = app.add_subcommand("grid", "agent payoff on an n x n policy grid. CSV: trigger,after,mean,stderr,bankruptcies");
    targets_opts(grid);
    cost_opts(grid);
    sim_opts(grid);
    grid_opts(grid);
    handlers.emplace_back(grid, cmd_grid);

    auto* ps = app.add_subcommand(
        "principal-search",
        "Principal payoff over a target grid. CSV: x_hat,x_star,lambda,kappa,mean,stderr,bankruptcies,error");
    targets_opts(ps);
    sim_opts(ps);
    grid_opts(ps);
    handlers.emplace_back(ps, cmd_principal_search);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        Context c;
        c.flags = f;
        c.cfg = load_config(f.config);
        c.model = validate_model(c.cfg.model, c.cfg.jumps);
        c.roots = solve_roots(*c.model);
        c.log = coeff_b_c(*c.model);
        const CsvSink csv(f.csv);
        for (const auto& [sub, handler] : handlers) {
            if (!sub->parsed()) continue;
            const Json j = handler(c, csv);
            out << j.dump(2) << '\n';
            return 0;
        }
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace costcal::cli
