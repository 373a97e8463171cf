#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "scalemix/panel.hpp"
#include "scalemix/rng.hpp"

namespace scalemix::tu {

inline std::vector<Site> line_sites(std::size_t n, double spacing_km) {
  std::vector<Site> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({"S" + std::to_string(i), {spacing_km * static_cast<double>(i), 0.0}});
  return s;
}

/// Uniform-scale panel with value(year, day, site) = f(year, day, site).
inline PanelDataset make_panel(const std::vector<Site>& sites, std::size_t years, std::size_t days,
                               const std::function<double(std::size_t, std::size_t, std::size_t)>& f) {
  PanelDataset p(sites, years, days, ValueScale::Uniform);
  for (std::size_t y = 0; y < years; ++y)
    for (std::size_t d = 0; d < days; ++d)
      for (std::size_t s = 0; s < sites.size(); ++s) p.set(y, d, s, f(y, d, s));
  return p;
}

inline PanelDataset independent_panel(const std::vector<Site>& sites, std::size_t years, std::size_t days,
                                      std::uint64_t seed) {
  RandomStream rng(seed);
  return make_panel(sites, years, days, [&](std::size_t, std::size_t, std::size_t) { return rng.uniform(); });
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace scalemix::tu
