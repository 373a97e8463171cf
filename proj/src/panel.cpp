#include "scalemix/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "scalemix/errors.hpp"
#include "scalemix/rng.hpp"

namespace scalemix {

std::string to_string(ValueScale s) { return s == ValueScale::Data ? "data" : "uniform"; }

PanelDataset::PanelDataset(std::vector<Site> sites, std::size_t n_years, std::size_t n_days, ValueScale scale)
    : sites_(std::move(sites)),
      n_years_(n_years),
      n_days_(n_days),
      scale_(scale),
      values_(sites_.size() * n_years * n_days, std::numeric_limits<double>::quiet_NaN()),
      mask_(sites_.size() * n_years * n_days, 0) {}

std::vector<Point2> PanelDataset::coordinates() const {
  std::vector<Point2> out;
  out.reserve(sites_.size());
  for (const auto& s : sites_) out.push_back(s.coord);
  return out;
}

void PanelDataset::set_missing(std::size_t year, std::size_t day, std::size_t site) noexcept {
  values_[index(year, day, site)] = std::numeric_limits<double>::quiet_NaN();
  mask_[index(year, day, site)] = 0;
}

bool PanelDataset::fully_observed() const noexcept {
  return std::all_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; });
}

PanelDataset PanelDataset::select_years(std::span<const std::size_t> years) const {
  PanelDataset out(sites_, years.size(), n_days_, scale_);
  for (std::size_t s = 0; s < n_sites(); ++s)
    for (std::size_t y = 0; y < years.size(); ++y) {
      if (years[y] >= n_years_) throw LayoutError("select_years: year index out of range");
      for (std::size_t d = 0; d < n_days_; ++d) {
        out.values_[out.index(y, d, s)] = values_[index(years[y], d, s)];
        out.mask_[out.index(y, d, s)] = mask_[index(years[y], d, s)];
      }
    }
  return out;
}

PanelDataset PanelDataset::select_sites(std::span<const std::size_t> sites) const {
  std::vector<Site> kept;
  for (auto s : sites) {
    if (s >= n_sites()) throw LayoutError("select_sites: site index out of range");
    kept.push_back(sites_[s]);
  }
  PanelDataset out(std::move(kept), n_years_, n_days_, scale_);
  const std::size_t block = n_years_ * n_days_;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(sites[k] * block), block,
                out.values_.begin() + static_cast<std::ptrdiff_t>(k * block));
    std::copy_n(mask_.begin() + static_cast<std::ptrdiff_t>(sites[k] * block), block,
                out.mask_.begin() + static_cast<std::ptrdiff_t>(k * block));
  }
  return out;
}

void PanelDataset::validate() const {
  std::set<std::string> ids;
  for (const auto& s : sites_) {
    if (!std::isfinite(s.coord.x) || !std::isfinite(s.coord.y))
      throw LayoutError("site '" + s.id + "' has non-finite coordinates");
    if (!ids.insert(s.id).second) throw LayoutError("duplicated site_id '" + s.id + "'");
  }
  if (scale_ == ValueScale::Uniform)
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (mask_[i] && !(values_[i] >= 0.0 && values_[i] <= 1.0))
        throw LayoutError("uniform-scale panel holds a value outside [0, 1]");
}

bool PanelDataset::operator==(const PanelDataset& other) const {
  if (n_years_ != other.n_years_ || n_days_ != other.n_days_ || scale_ != other.scale_) return false;
  if (sites_.size() != other.sites_.size()) return false;
  for (std::size_t i = 0; i < sites_.size(); ++i)
    if (sites_[i].id != other.sites_[i].id || sites_[i].coord.x != other.sites_[i].coord.x ||
        sites_[i].coord.y != other.sites_[i].coord.y)
      return false;
  if (mask_ != other.mask_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (mask_[i] && values_[i] != other.values_[i]) return false;
  return true;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = 0;
    while (start < field.size() && field[start] == ' ') ++start;
    out.push_back(field.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw IngestError("line " + std::to_string(line_no) + ": non-numeric " + what + " '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& what, std::size_t line_no) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw IngestError("line " + std::to_string(line_no) + ": non-integer " + what + " '" + s + "'");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

}  // namespace

std::vector<Site> read_stations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("stations CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "site_id" || header[1] != "x_km" || header[2] != "y_km")
    throw IngestError("stations CSV header must be site_id,x_km,y_km");
  std::vector<Site> sites;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw IngestError("stations line " + std::to_string(line_no) + ": expected 3 fields");
    Site s{f[0], {parse_double(f[1], "x_km", line_no), parse_double(f[2], "y_km", line_no)}};
    if (!ids.insert(s.id).second) throw IngestError("duplicated site_id '" + s.id + "' in stations CSV");
    sites.push_back(std::move(s));
  }
  if (sites.empty()) throw IngestError("stations CSV lists no sites");
  return sites;
}

PanelDataset ingest_streams(std::istream& stations, std::istream& values, ValueScale scale) {
  auto sites = read_stations(stations);
  std::unordered_map<std::string, std::size_t> site_index;
  for (std::size_t i = 0; i < sites.size(); ++i) site_index[sites[i].id] = i;

  struct Record {
    std::size_t site;
    long long year;
    long long day;
    double value;
  };
  std::vector<Record> records;
  std::string line;
  if (!std::getline(values, line)) throw IngestError("values CSV is empty");
  const auto header = split_csv_line(line);
  if (header.size() != 4 || header[0] != "site_id" || header[1] != "year" || header[2] != "day_index" ||
      header[3] != "value")
    throw IngestError("values CSV header must be site_id,year,day_index,value");
  std::size_t line_no = 1;
  std::map<long long, long long> max_day_per_year;
  while (std::getline(values, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw IngestError("values line " + std::to_string(line_no) + ": expected 4 fields");
    const auto it = site_index.find(f[0]);
    if (it == site_index.end())
      throw IngestError("values line " + std::to_string(line_no) + ": unknown site_id '" + f[0] + "'");
    Record r{it->second, parse_int(f[1], "year", line_no), parse_int(f[2], "day_index", line_no),
             parse_double(f[3], "value", line_no)};
    if (r.day < 1) throw IngestError("values line " + std::to_string(line_no) + ": day_index must be >= 1");
    auto& m = max_day_per_year[r.year];
    m = std::max(m, r.day);
    records.push_back(r);
  }
  if (records.empty()) throw IngestError("values CSV holds no records");

  const long long n_days = max_day_per_year.begin()->second;
  for (const auto& [year, max_day] : max_day_per_year)
    if (max_day != n_days)
      throw IngestError("inconsistent number of days: year " + std::to_string(year) + " has " +
                        std::to_string(max_day) + ", expected " + std::to_string(n_days));
  std::map<long long, std::size_t> year_index;
  for (const auto& [year, _] : max_day_per_year) year_index.emplace(year, year_index.size());

  PanelDataset panel(std::move(sites), year_index.size(), static_cast<std::size_t>(n_days), scale);
  for (const auto& r : records) {
    const std::size_t y = year_index.at(r.year);
    const auto d = static_cast<std::size_t>(r.day - 1);
    if (panel.observed(y, d, r.site))
      throw IngestError("duplicate record for site '" + panel.sites()[r.site].id + "', year " +
                        std::to_string(r.year) + ", day " + std::to_string(r.day));
    panel.set(y, d, r.site, r.value);
  }
  panel.validate();
  return panel;
}

PanelDataset ingest(const std::filesystem::path& stations_csv, const std::filesystem::path& values_csv,
                    ValueScale scale) {
  std::ifstream st(stations_csv);
  if (!st) throw IngestError("cannot open " + stations_csv.string());
  std::ifstream vs(values_csv);
  if (!vs) throw IngestError("cannot open " + values_csv.string());
  return ingest_streams(st, vs, scale);
}

void write_stations(std::ostream& out, const std::vector<Site>& sites) {
  out << "site_id,x_km,y_km\n";
  for (const auto& s : sites) out << s.id << ',' << format_double(s.coord.x) << ',' << format_double(s.coord.y) << '\n';
}

void write_values(std::ostream& out, const PanelDataset& data, int first_year) {
  out << "site_id,year,day_index,value\n";
  for (std::size_t s = 0; s < data.n_sites(); ++s)
    for (std::size_t y = 0; y < data.n_years(); ++y)
      for (std::size_t d = 0; d < data.n_days(); ++d)
        if (data.observed(y, d, s))
          out << data.sites()[s].id << ',' << first_year + static_cast<int>(y) << ',' << d + 1 << ','
              << format_double(data.value(y, d, s)) << '\n';
}

void export_panel(const PanelDataset& data, const std::filesystem::path& stations_csv,
                  const std::filesystem::path& values_csv, int first_year) {
  std::ofstream st(stations_csv);
  if (!st) throw IngestError("cannot write " + stations_csv.string());
  write_stations(st, data.sites());
  std::ofstream vs(values_csv);
  if (!vs) throw IngestError("cannot write " + values_csv.string());
  write_values(vs, data, first_year);
}

std::vector<Site> province_like_sites(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t kTotal = 30;
  constexpr double kMaxDistance = 68.0;
  constexpr double kMinSeparation = 3.0;
  if (n > kTotal) throw ConfigError("province_like_sites: at most 30 stations");
  RandomStream stream(seed, 0x5354);
  std::vector<Point2> pts;
  while (pts.size() < kTotal) {
    const double u = 2.0 * stream.uniform() - 1.0;
    const double v = 2.0 * stream.uniform() - 1.0;
    if (u * u + v * v > 1.0) continue;
    const Point2 p{40.0 * u, 24.0 * v};
    bool ok = true;
    for (const auto& q : pts) ok = ok && distance(p, q) >= kMinSeparation;
    if (ok) pts.push_back(p);
  }
  double dmax = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t k = 0; k < i; ++k) dmax = std::max(dmax, distance(pts[i], pts[k]));
  std::vector<Site> sites;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "ST%02zu", i + 1);
    const double f = kMaxDistance / dmax;
    // Round to metres so CSV round trips are exact.
    sites.push_back({id, {std::round(pts[i].x * f * 1000.0) / 1000.0, std::round(pts[i].y * f * 1000.0) / 1000.0}});
  }
  return sites;
}

}  // namespace scalemix
