#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

#include "costcal/model.hpp"

namespace costcal::detail {

// z^m := x̂^m - x*^m (a difference of powers, not a power of z).
inline double zpow(const PolicyTargets& t, double m) { return std::pow(t.x_hat, m) - std::pow(t.x_star, m); }

// TOMS 748 on a sign-changing bracket. Stops once |f| <= ftol at an endpoint or
// the bracket has collapsed to a few ulps; returns the endpoint with smaller |f|.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double ftol) {
    if (lo > hi) std::swap(lo, hi);
    const double flo = f(lo), fhi = f(hi);
    if (std::abs(flo) <= ftol) return lo;
    if (std::abs(fhi) <= ftol) return hi;
    double best = lo, fbest = std::abs(flo);
    auto g = [&](double x) {
        const double v = f(x);
        if (std::abs(v) < fbest) {
            fbest = std::abs(v);
            best = x;
        }
        return v;
    };
    boost::math::tools::eps_tolerance<double> collapsed(std::numeric_limits<double>::digits - 2);
    auto done = [&](double a, double b) { return fbest <= ftol || collapsed(a, b); };
    std::uintmax_t max_iter = 400;
    boost::math::tools::toms748_solve(g, lo, hi, flo, fhi, done, max_iter);
    return best;
}

}  // namespace costcal::detail
