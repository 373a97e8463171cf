#pragma once

#include <span>
#include <vector>

namespace scalemix {

/// Linear interpolation of order statistics (R type 7): h = (n - 1) u.
/// `sorted` must be ascending and non-empty. Every quantile in this library uses it.
double quantile_sorted(std::span<const double> sorted, double u);

/// Copies, sorts and calls quantile_sorted. NaNs are dropped.
double empirical_quantile(std::span<const double> values, double u);

/// Percentile interval (type 7) at the given central level.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval percentile_interval(std::span<const double> values, double level);

}  // namespace scalemix
