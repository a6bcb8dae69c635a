#pragma once

#include <cstddef>
#include <vector>

namespace costcal::detail {

// Two-level block maxima over a sequence, for first-passage and range-max
// queries that skip whole blocks lying below the threshold.
class PathIndex {
public:
    static constexpr std::size_t kBlock = 64;
    static constexpr std::size_t kSuper = 64 * kBlock;

    void build(const double* values, std::size_t n);

    // Smallest i in [from, end) with values[i] >= threshold, or end.
    std::size_t first_at_least(std::size_t from, std::size_t end, double threshold) const;

    // max of values[lo..hi], inclusive; requires lo <= hi < size.
    double range_max(std::size_t lo, std::size_t hi) const;

private:
    const double* v_ = nullptr;
    std::size_t n_ = 0;
    std::vector<double> block_;
    std::vector<double> super_;
};

}  // namespace costcal::detail
