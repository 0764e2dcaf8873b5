#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace fbgskin {

// Quantile with linear interpolation between closest ranks.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of empty list");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile must be in [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double median_of(const std::vector<double>& values) {
    return percentile(values, 0.5);
}

}  // namespace fbgskin
