#include "scalemix/stats.hpp"

#include <algorithm>
#include <cmath>

#include "scalemix/errors.hpp"

namespace scalemix {

double quantile_sorted(std::span<const double> sorted, double u) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * u;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double empirical_quantile(std::span<const double> values, double u) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values)
    if (!std::isnan(x)) v.push_back(x);
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, u);
}

Interval percentile_interval(std::span<const double> values, double level) {
  const double tail = 0.5 * (1.0 - level);
  return {empirical_quantile(values, tail), empirical_quantile(values, 1.0 - tail)};
}

}  // namespace scalemix
