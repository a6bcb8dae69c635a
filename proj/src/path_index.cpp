#include "path_index.hpp"

#include <algorithm>
#include <limits>

namespace costcal::detail {

void PathIndex::build(const double* values, std::size_t n) {
    v_ = values;
    n_ = n;
    const double lowest = -std::numeric_limits<double>::infinity();
    block_.assign((n + kBlock - 1) / kBlock, lowest);
    super_.assign((n + kSuper - 1) / kSuper, lowest);
    for (std::size_t i = 0; i < n; ++i) {
        double& b = block_[i / kBlock];
        b = std::max(b, values[i]);
    }
    for (std::size_t k = 0; k < block_.size(); ++k) {
        double& s = super_[k * kBlock / kSuper];
        s = std::max(s, block_[k]);
    }
}

std::size_t PathIndex::first_at_least(std::size_t from, std::size_t end, double threshold) const {
    end = std::min(end, n_);
    std::size_t i = from;
    while (i < end) {
        if (i % kSuper == 0 && i + kSuper <= end && super_[i / kSuper] < threshold) {
            i += kSuper;
        } else if (i % kBlock == 0 && i + kBlock <= end && block_[i / kBlock] < threshold) {
            i += kBlock;
        } else {
            if (v_[i] >= threshold) return i;
            ++i;
        }
    }
    return end;
}

double PathIndex::range_max(std::size_t lo, std::size_t hi) const {
    double m = -std::numeric_limits<double>::infinity();
    std::size_t i = lo;
    while (i <= hi) {
        if (i % kSuper == 0 && i + kSuper - 1 <= hi) {
            m = std::max(m, super_[i / kSuper]);
            i += kSuper;
        } else if (i % kBlock == 0 && i + kBlock - 1 <= hi) {
            m = std::max(m, block_[i / kBlock]);
            i += kBlock;
        } else {
            m = std::max(m, v_[i]);
            ++i;
        }
    }
    return m;
}

}  // namespace costcal::detail
