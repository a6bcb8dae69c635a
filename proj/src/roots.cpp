#include "costcal/roots.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "detail.hpp"

namespace costcal {

namespace {

constexpr double kResidualTol = 1e-12;
constexpr double kBracketLimit = 256.0;

}  // namespace

double char_fn(const ValidatedModel& model, double l) {
    const double s2 = model.sigma() * model.sigma();
    const double jump = levy_sum(model, [l](double g) { return std::pow(1.0 + g, l) - 1.0 - l * g; });
    return 0.5 * s2 * l * (l - 1.0) + l * model.gamma_drift() - model.delta() + jump;
}

RootPair closed_form_roots(const ValidatedModel& model) {
    if (model.has_jumps())
        throw Error(ErrorCode::JumpsPresent, "closed_form_roots requires an empty jump list");
    const double s2 = model.sigma() * model.sigma();
    const double lin = model.gamma_drift() - 0.5 * s2;
    const double disc = std::sqrt(lin * lin + 2.0 * s2 * model.delta());
    // Cancellation-free pairing: compute the larger-magnitude root first.
    const double q = -0.5 * (lin + std::copysign(disc, lin));
    const double r1 = q / (0.5 * s2);
    const double r2 = -model.delta() / q;
    return r1 < r2 ? RootPair{r1, r2} : RootPair{r2, r1};
}

RootPair solve_roots(const ValidatedModel& model) {
    auto h = [&model](double l) { return char_fn(model, l); };
    RootPair out;
    for (int dir : {1, -1}) {
        double edge = 2.0 * dir;
        while (h(edge) <= 0.0) {
            edge *= 2.0;
            if (std::abs(edge) > kBracketLimit)
                throw BracketNotFoundError(kBracketLimit,
                                           "no sign change of h within |l| <= 256 (" +
                                               std::string(dir > 0 ? "positive" : "negative") + " side)");
        }
        const double root = detail::bracketed_root(h, 0.0, edge, kResidualTol);
        (dir > 0 ? out.l2 : out.l1) = root;
    }
    return out;
}

}  // namespace costcal
