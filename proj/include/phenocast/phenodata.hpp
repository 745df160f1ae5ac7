#pragma once

// Temperature and bloom-date records, per-year day grids, and the
// growing-degree-day transforms built on them.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace phenocast {

using Date = std::chrono::year_month_day;

Date make_date(int year, unsigned month, unsigned day);
Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& date);
int year_of(const Date& date);
bool is_leap_year(int year);
int days_in_year(int year);
/// 1-based day of the year (January 1 is day 1).
int day_of_year(const Date& date);
Date date_from_day_of_year(int year, int day);
Date add_days(const Date& date, long long days);
long long days_between(const Date& from, const Date& to);

struct DailyTemperature {
  Date date;
  double tmin = 0.0;
  double tmax = 0.0;

  double tavg() const noexcept { return (tmin + tmax) / 2.0; }
};

/// A run of calendar days missing between two stored records.
struct TemperatureGap {
  Date first_missing;
  int missing_days = 0;
};

/// Daily temperatures for one location with strictly increasing dates.
/// Immutable once constructed.
class TemperatureSeries {
 public:
  TemperatureSeries() = default;
  /// Validates ordering (strictly increasing, no duplicates) and tmin <= tmax.
  explicit TemperatureSeries(std::vector<DailyTemperature> records);

  /// Convenience for sources that only carry a daily mean: tmin = tmax = tavg.
  static TemperatureSeries from_tavg(const Date& first, std::span<const double> tavg);

  std::span<const DailyTemperature> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const Date& first_date() const;
  const Date& last_date() const;
  const std::vector<TemperatureGap>& gaps() const noexcept { return gaps_; }

  std::optional<std::size_t> index_of(const Date& date) const;
  std::vector<double> tavg() const;

  /// Daily means for days 1..through_day of `year`. Throws ValidationError
  /// naming the first missing date.
  std::vector<double> year_tavg(int year, int through_day) const;
  /// Daily means from January 1 of `year` for as many contiguous days as are
  /// stored (at most the length of the year). Empty when January 1 is absent.
  std::vector<double> contiguous_year_tavg(int year) const;
  /// Up to `max_days` contiguous daily means ending the day before `date`.
  std::vector<double> tavg_before(const Date& date, std::size_t max_days) const;

 private:
  std::vector<DailyTemperature> records_;
  std::vector<TemperatureGap> gaps_;
};

/// Column names used when reading temperature CSV files.
struct TemperatureColumns {
  std::string date = "date";
  std::string tmin = "tmin";
  std::string tmax = "tmax";
  std::string tavg = "tavg";
};

/// Reads `date,tmin,tmax` or `date,tavg` CSV. Gaps are kept and reported
/// through TemperatureSeries::gaps().
TemperatureSeries load_temperature(const std::filesystem::path& path,
                                   const TemperatureColumns& columns = {});
TemperatureSeries parse_temperature_csv(std::string_view text,
                                        const TemperatureColumns& columns = {});
void write_temperature_csv(std::ostream& out, const TemperatureSeries& series);

/// Fills isolated one-day gaps by linear interpolation of tmin and tmax.
/// Longer gaps are left in place.
TemperatureSeries fill_single_day_gaps(const TemperatureSeries& series);

/// One crop-year observation. `day` is the bloom day-of-year, or the last
/// day observed without bloom when `censored` is set.
struct BloomRecord {
  int year = 0;
  int day = 0;
  bool censored = false;

  static BloomRecord observed(int year, int bloom_day) { return {year, bloom_day, false}; }
  static BloomRecord censored_at(int year, int last_day) { return {year, last_day, true}; }
  void validate() const;

  friend bool operator==(const BloomRecord&, const BloomRecord&) = default;
};

/// Reads `year,bloom_day[,censored_at]` CSV. A row either gives a bloom day
/// or leaves it empty and gives censored_at.
std::vector<BloomRecord> load_bloom(const std::filesystem::path& path);
std::vector<BloomRecord> parse_bloom_csv(std::string_view text);
void write_bloom_csv(std::ostream& out, std::span<const BloomRecord> records);

/// One year on its day grid t = 1..length() with the event outcome.
class YearPanel {
 public:
  YearPanel(int year, std::vector<double> tavg, BloomRecord outcome);
  /// Panel with no outcome, used for prediction-time years.
  static YearPanel unobserved(int year, std::vector<double> tavg);

  int year() const noexcept { return year_; }
  int length() const noexcept { return static_cast<int>(tavg_.size()); }
  int days_in_year() const noexcept { return phenocast::days_in_year(year_); }
  std::span<const double> tavg() const noexcept { return tavg_; }
  const BloomRecord& outcome() const noexcept { return outcome_; }
  bool censored() const noexcept { return outcome_.censored; }
  /// Number of days contributing to the likelihood (event or censoring day).
  int exposure_days() const noexcept { return outcome_.day; }

  /// Y_t for t = 1..n: n = length() when the event is observed, the
  /// censoring day otherwise.
  std::vector<std::uint8_t> indicator_path() const;

 private:
  int year_;
  std::vector<double> tavg_;
  BloomRecord outcome_;
};

/// Inverse of YearPanel::indicator_path(). Throws if the path is decreasing.
BloomRecord decode_indicator_path(int year, std::span<const std::uint8_t> path);

/// Builds a panel holding every contiguous stored day of the record's year.
/// Throws ValidationError naming the first missing date before the event day.
YearPanel build_panel(const TemperatureSeries& series, const BloomRecord& record);
std::vector<YearPanel> build_panels(const TemperatureSeries& series,
                                    std::span<const BloomRecord> records);

/// Daily growing degree days: tavg - t_base when positive, else 0.
double gdd(double tavg, double t_base);
std::vector<double> gdd_series(std::span<const double> tavg, double t_base);
/// Running sum of gdd from day 1.
std::vector<double> agdd_series(std::span<const double> tavg, double t_base);
std::vector<double> agdd_series(const YearPanel& panel, double t_base);
/// AGDD for days 1..through_day of a calendar year of a series; throws
/// naming the gap when a day is missing.
std::vector<double> agdd_series(const TemperatureSeries& series, int year, int through_day,
                                double t_base);

}  // namespace phenocast
