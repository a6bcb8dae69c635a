#include "costcal/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "costcal/design.hpp"
#include "costcal/value.hpp"
#include "path_index.hpp"
#include "sim_rng.hpp"

namespace costcal {

namespace {

constexpr std::int64_t kChunk = 256;

enum class Mode { Agent, Principal, Terminal };

struct Acc {
    double sum = 0.0;
    double sumsq = 0.0;
    double tail = 0.0;
    double purchases = 0.0;
    std::int64_t n = 0;
    std::int64_t bankrupt = 0;

    void add(const Acc& o) {
        sum += o.sum;
        sumsq += o.sumsq;
        tail += o.tail;
        purchases += o.purchases;
        n += o.n;
        bankrupt += o.bankrupt;
    }
};

// Pairwise reduction in chunk order, so the result does not depend on which
// worker produced which chunk.
Acc tree_reduce(const std::vector<Acc>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    Acc a = tree_reduce(v, lo, mid);
    a.add(tree_reduce(v, mid, hi));
    return a;
}

PayoffEstimate finish(const Acc& a) {
    PayoffEstimate e;
    e.paths_used = a.n;
    e.bankruptcies = a.bankrupt;
    const double n = static_cast<double>(a.n);
    e.mean = a.sum / n;
    e.mean_purchases = a.purchases / n;
    e.tail_bound = a.tail / n;
    if (a.n > 1) {
        const double var = std::max(0.0, (a.sumsq - n * e.mean * e.mean) / (n - 1.0));
        e.std_error = std::sqrt(var / n);
    }
    return e;
}

class Engine {
public:
    Engine(const ValidatedModel& model, const SimConfig& cfg, Mode mode, const CostParams& costs,
           std::vector<Policy> policies, const PrincipalParams& pp)
        : model_(model), cfg_(cfg), mode_(mode), costs_(costs), policies_(std::move(policies)), pp_(pp) {
        steps_ = static_cast<std::size_t>(step_count(cfg));
        for (const auto& a : model.atoms()) {
            weights_.push_back(a.rate);
            log_factor_.push_back(std::log1p(a.factor));
        }
        for (const auto& p : policies_) sizes_.push_back(purchase_size(p, costs_));
    }

    std::vector<PayoffEstimate> run() const {
        const std::int64_t chunks = (cfg_.paths + kChunk - 1) / kChunk;
        const std::size_t width = mode_ == Mode::Terminal ? 1 : policies_.size();
        std::vector<std::vector<Acc>> per_chunk(static_cast<std::size_t>(chunks), std::vector<Acc>(width));
        std::atomic<std::int64_t> next{0};
        auto worker = [&] {
            Buffers buf(steps_, mode_);
            for (std::int64_t c = next++; c < chunks; c = next++) {
                const std::int64_t end = std::min(cfg_.paths, (c + 1) * kChunk);
                auto& out = per_chunk[static_cast<std::size_t>(c)];
                for (std::int64_t p = c * kChunk; p < end; ++p) run_path(static_cast<std::uint64_t>(p), buf, out);
            }
        };
        const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        const auto nthreads = static_cast<std::int64_t>(cfg_.threads > 0 ? static_cast<unsigned>(cfg_.threads) : hw);
        const std::int64_t used = std::max<std::int64_t>(1, std::min(nthreads, chunks));
        if (used == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::int64_t i = 0; i < used; ++i) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        std::vector<PayoffEstimate> res;
        for (std::size_t k = 0; k < width; ++k) {
            std::vector<Acc> col;
            col.reserve(per_chunk.size());
            for (const auto& row : per_chunk) col.push_back(row[k]);
            res.push_back(finish(tree_reduce(col, 0, col.size())));
        }
        return res;
    }

private:
    struct Buffers {
        Buffers(std::size_t n, Mode mode) : s(n + 1), u(n + 1) {
            if (mode == Mode::Principal) p.resize(n + 1);
        }
        std::vector<double> s;  // log of the cumulative Euler multiplier
        std::vector<double> u;  // prefix of disc_k * s_k
        std::vector<double> p;  // prefix of disc_k * exp(s_k), Principal only
        detail::PathIndex index;
    };

    double rate() const { return mode_ == Mode::Principal ? pp_.delta_p : model_.delta(); }

    // Σ_{k<n} e^{-ρ k dt}
    double disc_prefix(std::size_t n) const {
        const double rho = rate();
        return std::expm1(-rho * cfg_.dt * static_cast<double>(n)) / std::expm1(-rho * cfg_.dt);
    }
    double disc(std::size_t k) const { return std::exp(-rate() * cfg_.dt * static_cast<double>(k)); }

    // Fills the buffers; returns (end, bankrupt). Purchases may happen at steps
    // [0, end); s is valid on [0, end] unless bankrupt, then on [0, end).
    std::pair<std::size_t, bool> generate(std::uint64_t path, Buffers& b) const {
        boost::random::mt19937_64 rng_w(detail::substream_seed(cfg_.seed, path, detail::Stream::Brownian));
        boost::random::mt19937_64 rng_j(detail::substream_seed(cfg_.seed, path, detail::Stream::Jumps));
        boost::random::normal_distribution<double> normal;
        const double lam = model_.total_intensity();
        const bool jumps = lam > 0.0;
        boost::random::exponential_distribution<double> wait(jumps ? lam : 1.0);
        boost::random::discrete_distribution<int> pick;
        if (jumps) pick = boost::random::discrete_distribution<int>(weights_.begin(), weights_.end());
        double next_jump = jumps ? wait(rng_j) : std::numeric_limits<double>::infinity();

        const double mu_dt = (model_.gamma_drift() - model_.compensator_mean()) * cfg_.dt;
        const double vol = model_.sigma() * std::sqrt(cfg_.dt);
        const bool principal = mode_ == Mode::Principal;
        const double rho_dt = rate() * cfg_.dt;
        b.s[0] = 0.0;
        b.u[0] = 0.0;
        if (principal) b.p[0] = 0.0;
        const double q = std::exp(-rho_dt);
        double w = 1.0;
        for (std::size_t k = 0; k < steps_; ++k, w *= q) {
            b.u[k + 1] = b.u[k] + w * b.s[k];
            if (principal) b.p[k + 1] = b.p[k] + w * std::exp(b.s[k]);
            const double e = mu_dt + vol * normal(rng_w);
            if (!(e > -1.0)) {
                b.index.build(b.s.data(), k + 1);
                return {k + 1, true};
            }
            double d = std::log1p(e);
            const double t_next = cfg_.dt * static_cast<double>(k + 1);
            while (next_jump <= t_next) {
                d += log_factor_[static_cast<std::size_t>(pick(rng_j))];
                next_jump += wait(rng_j);
            }
            b.s[k + 1] = b.s[k] + d;
        }
        b.index.build(b.s.data(), steps_ + 1);
        return {steps_, false};
    }

    void run_path(std::uint64_t path, Buffers& b, std::vector<Acc>& out) const {
        const auto [end, bankrupt] = generate(path, b);
        if (mode_ == Mode::Terminal) {
            const double t = cfg_.dt * static_cast<double>(steps_);
            const double v = bankrupt ? 0.0 : cfg_.x0 * std::exp(b.s[end] - model_.gamma_drift() * t);
            record(out[0], v, 0.0, 0.0, bankrupt);
            return;
        }
        const std::size_t last_valid = bankrupt ? end - 1 : end;
        const double t_end = cfg_.dt * static_cast<double>(steps_);
        for (std::size_t i = 0; i < policies_.size(); ++i) {
            const Policy& pol = policies_[i];
            const double z = sizes_[i];
            const double ln_trigger = std::log(pol.trigger);
            const double ln_after = std::log(pol.after);
            double level = std::log(cfg_.x0);
            std::size_t r = 0, from = 0;
            double running = 0.0, lump = 0.0, ln_max = -std::numeric_limits<double>::infinity();
            int purchases = 0;
            for (;;) {
                const double shift = level - b.s[r];
                const std::size_t e = b.index.first_at_least(from, end, ln_trigger - shift);
                running += segment(b, r, e, shift);
                ln_max = std::max(ln_max, shift + b.index.range_max(r, std::min(e, last_valid)));
                if (e >= end) break;
                lump += disc(e) * purchase_gain(z, cfg_.dt * static_cast<double>(e));
                ++purchases;
                r = e;
                from = e + 1;
                level = ln_after;
            }
            const double value = running * cfg_.dt + lump;
            const double tail = bankrupt ? 0.0 : tail_bound(ln_max, z, t_end);
            record(out[i], value, tail, purchases, bankrupt);
        }
    }

    // Running gain over steps [r, e) of a segment whose log-state is shift + s_k.
    double segment(const Buffers& b, std::size_t r, std::size_t e, double shift) const {
        if (e <= r) return 0.0;
        const double w = disc_prefix(e) - disc_prefix(r);
        const double log_part = shift * w + (b.u[e] - b.u[r]);
        if (mode_ == Mode::Agent) return model_.epsilon() * log_part;
        return pp_.w0 * w + pp_.w1 * std::exp(shift) * (b.p[e] - b.p[r]) + pp_.w2 * log_part;
    }

    double purchase_gain(double z, double tau) const {
        if (mode_ == Mode::Agent) return z;
        return pp_.lambda_p * z + pp_.c_p * tau + pp_.alpha_p;
    }

    double tail_bound(double ln_max, double z, double t_end) const {
        const double rho = rate();
        const double head = std::exp(-rho * t_end) / rho;
        if (mode_ == Mode::Agent) return head * (std::abs(model_.epsilon() * ln_max) + std::abs(z));
        return head * (std::abs(pp_.w0) + std::abs(pp_.w1) * std::exp(ln_max) + std::abs(pp_.w2 * ln_max) +
                       std::abs(pp_.lambda_p * z + pp_.alpha_p) + std::abs(pp_.c_p) * (t_end + 1.0 / rho));
    }

    static void record(Acc& a, double v, double tail, double purchases, bool bankrupt) {
        a.sum += v;
        a.sumsq += v * v;
        a.tail += tail;
        a.purchases += purchases;
        a.n += 1;
        a.bankrupt += bankrupt ? 1 : 0;
    }

    const ValidatedModel& model_;
    SimConfig cfg_;
    Mode mode_;
    CostParams costs_;
    std::vector<Policy> policies_;
    PrincipalParams pp_;
    std::size_t steps_ = 0;
    std::vector<double> weights_;
    std::vector<double> log_factor_;
    std::vector<double> sizes_;
};

void validate_principal(const PrincipalParams& pp) {
    for (double v : {pp.delta_p, pp.lambda_p, pp.c_p, pp.alpha_p, pp.w0, pp.w1, pp.w2})
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteParameter, "principal parameters must be finite");
    if (!(pp.delta_p > 0.0)) throw Error(ErrorCode::NonPositiveDelta, "principal.delta_p must be > 0");
}

std::vector<double> offsets(double span, int n) {
    if (n < 1 || !(span >= 0.0) || !(span < 1.0))
        throw Error(ErrorCode::InvalidGrid, "neighbourhood needs n >= 1 and 0 <= span < 1");
    std::vector<double> s;
    for (int i = 0; i < n; ++i) s.push_back(n == 1 ? 0.0 : -span + 2.0 * span * i / (n - 1));
    return s;
}

}  // namespace

void validate_sim_config(const SimConfig& cfg) {
    if (!std::isfinite(cfg.dt) || !(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidSimConfig, "sim.dt must be > 0");
    if (!std::isfinite(cfg.t_max) || !(cfg.t_max > 0.0))
        throw Error(ErrorCode::InvalidSimConfig, "sim.t_max must be > 0");
    if (cfg.paths < 1) throw Error(ErrorCode::InvalidSimConfig, "sim.paths must be >= 1");
    if (!std::isfinite(cfg.x0) || !(cfg.x0 > 0.0))
        throw Error(ErrorCode::NonPositiveInitialState, "sim.x0 must be > 0");
    if (cfg.t_max / cfg.dt > 1e9) throw Error(ErrorCode::InvalidSimConfig, "sim.t_max/sim.dt exceeds 1e9 steps");
}

std::int64_t step_count(const SimConfig& cfg) {
    const double ratio = cfg.t_max / cfg.dt;
    const double rounded = std::round(ratio);
    return static_cast<std::int64_t>(std::abs(ratio - rounded) <= 1e-9 * rounded ? rounded : std::ceil(ratio));
}

PayoffEstimate simulate_agent(const ValidatedModel& model, const CostParams& costs, const Policy& policy,
                              const SimConfig& cfg) {
    return policy_grid(model, costs, {policy}, cfg).entries.front().estimate;
}

PayoffEstimate simulate_principal(const ValidatedModel& model, const CostParams& costs, const Policy& policy,
                                  const PrincipalParams& pp, const SimConfig& cfg) {
    validate_sim_config(cfg);
    validate_principal(pp);
    validate_policy(policy, costs);
    return Engine(model, cfg, Mode::Principal, costs, {policy}, pp).run().front();
}

GridResult policy_grid(const ValidatedModel& model, const CostParams& costs, const std::vector<Policy>& grid,
                       const SimConfig& cfg) {
    validate_sim_config(cfg);
    if (grid.empty()) throw Error(ErrorCode::InvalidGrid, "policy_grid: empty policy list");
    for (const auto& p : grid) validate_policy(p, costs);
    const auto est = Engine(model, cfg, Mode::Agent, costs, grid, {}).run();
    GridResult out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.entries.push_back({grid[i], est[i]});
        if (est[i].mean > est[out.argmax].mean) out.argmax = i;
    }
    return out;
}

std::vector<Policy> policy_neighbourhood(const PolicyTargets& c, double span, int n) {
    validate_targets(c);
    std::vector<Policy> out;
    const auto s = offsets(span, n);
    for (double st : s)
        for (double sh : s) {
            const Policy p{c.x_star * (1.0 + st), c.x_hat * (1.0 + sh)};
            if (p.after < p.trigger) out.push_back(p);
        }
    return out;
}

std::vector<PolicyTargets> target_neighbourhood(const PolicyTargets& c, double span, int n) {
    std::vector<PolicyTargets> out;
    for (const auto& p : policy_neighbourhood(c, span, n)) out.push_back({p.after, p.trigger});
    return out;
}

TargetSearchResult principal_target_search(const ValidatedModel& model, const std::vector<PolicyTargets>& targets,
                                           const PrincipalParams& pp, const SimConfig& cfg, const RootPair& roots,
                                           double b) {
    validate_sim_config(cfg);
    validate_principal(pp);
    TargetSearchResult res;
    std::vector<std::size_t> feasible;
    for (const auto& t : targets) {
        TargetEntry e;
        e.targets = t;
        try {
            const auto costs = design_case2(t, roots, b);
            validate_policy(policy_from_targets(t), costs);
            e.costs = costs;
            feasible.push_back(res.entries.size());
        } catch (const Error& err) {
            e.error = err.what();
        }
        res.entries.push_back(std::move(e));
    }
    // Each target carries its own costs, so paths are shared by running the
    // engine once per target with the same seed.
    for (std::size_t idx : feasible) {
        auto& e = res.entries[idx];
        e.estimate = Engine(model, cfg, Mode::Principal, *e.costs, {policy_from_targets(e.targets)}, pp).run().front();
        if (!res.best || e.estimate->mean > res.entries[*res.best].estimate->mean) res.best = idx;
    }
    return res;
}

PayoffEstimate discounted_terminal_state(const ValidatedModel& model, const SimConfig& cfg) {
    validate_sim_config(cfg);
    return Engine(model, cfg, Mode::Terminal, {}, {}, {}).run().front();
}

double threshold_policy_value(const ValidatedModel& model, const CostParams& costs, const Policy& policy, double x0) {
    validate_policy(policy, costs);
    if (!(x0 > 0.0)) throw Error(ErrorCode::NonPositiveInitialState, "threshold_policy_value: x0 must be > 0");
    const auto roots = closed_form_roots(model);
    const auto lc = coeff_b_c(model);
    const double z = purchase_size(policy, costs);
    const double l2 = roots.l2;
    const double amp = (z - lc.b * std::log(policy.trigger / policy.after)) /
                       (std::pow(policy.trigger, l2) - std::pow(policy.after, l2));
    auto below = [&](double x) { return lc.b * std::log(x) + lc.c + amp * std::pow(x, l2); };
    if (x0 < policy.trigger) return below(x0);
    return below(policy.after) + (x0 - policy.after - costs.kappa) / (1.0 + costs.lambda);
}

}  // namespace costcal
