#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scalemix/correlation.hpp"

namespace scalemix {

struct Site {
  std::string id;
  Point2 coord;
};

enum class ValueScale { Data, Uniform };

std::string to_string(ValueScale s);

/// N independent years of T days at n sites, with a missing-value mask.
///
/// Storage is site-major: each site's N*T series is contiguous, year by year, so
/// per-site quantiles and within-year lag scans read sequential memory.
class PanelDataset {
 public:
  PanelDataset() = default;
  PanelDataset(std::vector<Site> sites, std::size_t n_years, std::size_t n_days, ValueScale scale);

  [[nodiscard]] std::size_t n_sites() const noexcept { return sites_.size(); }
  [[nodiscard]] std::size_t n_years() const noexcept { return n_years_; }
  [[nodiscard]] std::size_t n_days() const noexcept { return n_days_; }
  [[nodiscard]] ValueScale scale() const noexcept { return scale_; }
  void set_scale(ValueScale s) noexcept { scale_ = s; }

  [[nodiscard]] const std::vector<Site>& sites() const noexcept { return sites_; }
  [[nodiscard]] std::vector<Point2> coordinates() const;

  [[nodiscard]] std::size_t index(std::size_t year, std::size_t day, std::size_t site) const noexcept {
    return (site * n_years_ + year) * n_days_ + day;
  }
  [[nodiscard]] double value(std::size_t year, std::size_t day, std::size_t site) const noexcept {
    return values_[index(year, day, site)];
  }
  [[nodiscard]] bool observed(std::size_t year, std::size_t day, std::size_t site) const noexcept {
    return mask_[index(year, day, site)] != 0;
  }
  void set(std::size_t year, std::size_t day, std::size_t site, double v) noexcept {
    values_[index(year, day, site)] = v;
    mask_[index(year, day, site)] = 1;
  }
  void set_missing(std::size_t year, std::size_t day, std::size_t site) noexcept;

  /// The N*T series of one site (year-major), and its mask.
  [[nodiscard]] std::span<const double> site_series(std::size_t site) const noexcept {
    return {values_.data() + site * n_years_ * n_days_, n_years_ * n_days_};
  }
  [[nodiscard]] std::span<double> site_series(std::size_t site) noexcept {
    return {values_.data() + site * n_years_ * n_days_, n_years_ * n_days_};
  }
  [[nodiscard]] std::span<const std::uint8_t> site_mask(std::size_t site) const noexcept {
    return {mask_.data() + site * n_years_ * n_days_, n_years_ * n_days_};
  }

  [[nodiscard]] const std::vector<double>& raw_values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<std::uint8_t>& raw_mask() const noexcept { return mask_; }

  [[nodiscard]] bool fully_observed() const noexcept;

  /// Keeps the listed years, in the given order.
  [[nodiscard]] PanelDataset select_years(std::span<const std::size_t> years) const;
  /// Keeps the listed sites, in the given order.
  [[nodiscard]] PanelDataset select_sites(std::span<const std::size_t> sites) const;

  /// Checks the invariants: finite coordinates, unique ids, uniform values within [0, 1].
  void validate() const;

  bool operator==(const PanelDataset& other) const;

 private:
  std::vector<Site> sites_;
  std::size_t n_years_ = 0;
  std::size_t n_days_ = 0;
  ValueScale scale_ = ValueScale::Data;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

/// Stations CSV: header `site_id,x_km,y_km`. Values CSV: header
/// `site_id,year,day_index,value` with day_index 1..T and year any integer label.
/// Years are ordered by label; absent records are masked.
PanelDataset ingest(const std::filesystem::path& stations_csv, const std::filesystem::path& values_csv,
                    ValueScale scale = ValueScale::Data);
PanelDataset ingest_streams(std::istream& stations, std::istream& values, ValueScale scale = ValueScale::Data);

std::vector<Site> read_stations(std::istream& in);
void write_stations(std::ostream& out, const std::vector<Site>& sites);
/// Writes observed cells only; years are labelled first_year, first_year+1, ...
void write_values(std::ostream& out, const PanelDataset& data, int first_year = 1);
void export_panel(const PanelDataset& data, const std::filesystem::path& stations_csv,
                  const std::filesystem::path& values_csv, int first_year = 1);

/// Deterministic 30-station layout with the extent of a small province: maximum
/// inter-site distance 68 km. The first `n` stations are returned.
std::vector<Site> province_like_sites(std::size_t n = 30, std::uint64_t seed = 2024);

}  // namespace scalemix
