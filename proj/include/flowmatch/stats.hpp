#pragma once

#include <span>
#include <vector>

namespace flowmatch {

/// Linear-interpolation quantile (q in [0, 1]); NaN for empty input.
double quantile(std::vector<double> values, double q);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }
double mean(std::span<const double> values);

}  // namespace flowmatch
