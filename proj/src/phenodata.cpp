#include "phenocast/phenodata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "phenocast/error.hpp"

namespace phenocast {

namespace {

using std::chrono::sys_days;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

struct CsvLine {
  std::size_t number;
  std::vector<std::string_view> fields;
};

// Splits text into non-blank lines; the first is the header.
std::vector<CsvLine> read_lines(std::string_view text) {
  std::vector<CsvLine> lines;
  std::size_t number = 0, pos = 0;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    ++number;
    if (!trim(raw).empty()) lines.push_back({number, split_csv(raw)});
    if (nl == text.npos) break;
    pos = nl + 1;
  }
  return lines;
}

std::optional<std::size_t> column(const std::vector<std::string_view>& header, std::string_view name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Date make_date(int year, unsigned month, unsigned day) {
  const Date d{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!d.ok()) throw ValidationError("invalid calendar date");
  return d;
}

Date parse_iso_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    throw ValidationError("expected an ISO-8601 date (YYYY-MM-DD), got '" + std::string(text) + "'");
  const auto y = parse_number<int>(text.substr(0, 4));
  const auto m = parse_number<unsigned>(text.substr(5, 2));
  const auto d = parse_number<unsigned>(text.substr(8, 2));
  if (!y || !m || !d) throw ValidationError("malformed date '" + std::string(text) + "'");
  const Date date{std::chrono::year{*y}, std::chrono::month{*m}, std::chrono::day{*d}};
  if (!date.ok()) throw ValidationError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_iso_date(const Date& date) {
  std::ostringstream ss;
  ss << std::setfill('0') << std::setw(4) << static_cast<int>(date.year()) << '-' << std::setw(2)
     << static_cast<unsigned>(date.month()) << '-' << std::setw(2) << static_cast<unsigned>(date.day());
  return ss.str();
}

int year_of(const Date& date) { return static_cast<int>(date.year()); }

bool is_leap_year(int year) { return std::chrono::year{year}.is_leap(); }

int days_in_year(int year) { return is_leap_year(year) ? 366 : 365; }

int day_of_year(const Date& date) {
  const sys_days jan1{date.year() / std::chrono::January / 1};
  return static_cast<int>((sys_days{date} - jan1).count()) + 1;
}

Date date_from_day_of_year(int year, int day) {
  if (day < 1 || day > days_in_year(year)) throw ValidationError("day-of-year out of range");
  const sys_days jan1{std::chrono::year{year} / std::chrono::January / 1};
  return Date{jan1 + std::chrono::days{day - 1}};
}

Date add_days(const Date& date, long long days) { return Date{sys_days{date} + std::chrono::days{days}}; }

long long days_between(const Date& from, const Date& to) { return (sys_days{to} - sys_days{from}).count(); }

// ---------------------------------------------------------------------------

TemperatureSeries::TemperatureSeries(std::vector<DailyTemperature> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!r.date.ok()) throw ValidationError("invalid date in temperature series");
    if (!std::isfinite(r.tmin) || !std::isfinite(r.tmax))
      throw ValidationError("non-finite temperature on " + format_iso_date(r.date));
    if (r.tmin > r.tmax) throw ValidationError("tmin > tmax on " + format_iso_date(r.date));
    if (i == 0) continue;
    const long long step = days_between(records_[i - 1].date, r.date);
    if (step == 0) throw ValidationError("duplicate date " + format_iso_date(r.date));
    if (step < 0) throw ValidationError("dates not increasing at " + format_iso_date(r.date));
    if (step > 1)
      gaps_.push_back({add_days(records_[i - 1].date, 1), static_cast<int>(step - 1)});
  }
}

TemperatureSeries TemperatureSeries::from_tavg(const Date& first, std::span<const double> tavg) {
  std::vector<DailyTemperature> records;
  records.reserve(tavg.size());
  for (std::size_t i = 0; i < tavg.size(); ++i)
    records.push_back({add_days(first, static_cast<long long>(i)), tavg[i], tavg[i]});
  return TemperatureSeries(std::move(records));
}

const Date& TemperatureSeries::first_date() const {
  if (records_.empty()) throw ValidationError("empty temperature series");
  return records_.front().date;
}

const Date& TemperatureSeries::last_date() const {
  if (records_.empty()) throw ValidationError("empty temperature series");
  return records_.back().date;
}

std::optional<std::size_t> TemperatureSeries::index_of(const Date& date) const {
  const auto it = std::lower_bound(records_.begin(), records_.end(), date,
                                   [](const DailyTemperature& r, const Date& d) { return r.date < d; });
  if (it == records_.end() || it->date != date) return std::nullopt;
  return static_cast<std::size_t>(it - records_.begin());
}

std::vector<double> TemperatureSeries::tavg() const {
  std::vector<double> out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].tavg();
  return out;
}

std::vector<double> TemperatureSeries::year_tavg(int year, int through_day) const {
  if (through_day < 1 || through_day > days_in_year(year))
    throw ValidationError("day " + std::to_string(through_day) + " outside year " + std::to_string(year));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(through_day));
  const Date jan1 = date_from_day_of_year(year, 1);
  auto idx = index_of(jan1);
  for (int t = 1; t <= through_day; ++t) {
    const Date want = add_days(jan1, t - 1);
    if (!idx || *idx >= records_.size() || records_[*idx].date != want)
      throw ValidationError("missing temperature for " + format_iso_date(want) + " (day " +
                            std::to_string(t) + " of " + std::to_string(year) + ")");
    out.push_back(records_[*idx].tavg());
    ++*idx;
  }
  return out;
}

std::vector<double> TemperatureSeries::contiguous_year_tavg(int year) const {
  std::vector<double> out;
  const Date jan1 = date_from_day_of_year(year, 1);
  auto idx = index_of(jan1);
  if (!idx) return out;
  const int n = days_in_year(year);
  for (int t = 1; t <= n && *idx < records_.size(); ++t, ++*idx) {
    if (records_[*idx].date != add_days(jan1, t - 1)) break;
    out.push_back(records_[*idx].tavg());
  }
  return out;
}

std::vector<double> TemperatureSeries::tavg_before(const Date& date, std::size_t max_days) const {
  std::vector<double> out;
  auto idx = index_of(add_days(date, -1));
  if (!idx) return out;
  Date expected = add_days(date, -1);
  for (std::size_t i = *idx + 1; i-- > 0 && out.size() < max_days;) {
    if (records_[i].date != expected) break;
    out.push_back(records_[i].tavg());
    expected = add_days(expected, -1);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

TemperatureSeries parse_temperature_csv(std::string_view text, const TemperatureColumns& columns) {
  const auto lines = read_lines(text);
  if (lines.empty()) throw ParseError(0, "no records");
  const auto& header = lines.front().fields;
  const auto date_col = column(header, columns.date);
  if (!date_col) throw ParseError(lines.front().number, "missing '" + columns.date + "' column");
  const auto tmin_col = column(header, columns.tmin);
  const auto tmax_col = column(header, columns.tmax);
  const auto tavg_col = column(header, columns.tavg);
  const bool minmax = tmin_col && tmax_col;
  if (!minmax && !tavg_col)
    throw ParseError(lines.front().number, "expected columns date,tmin,tmax or date,tavg");
  if (lines.size() == 1) throw ParseError(0, "no records");

  std::vector<DailyTemperature> records;
  records.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, f] = lines[i];
    if (f.size() != header.size())
      throw ParseError(number, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(f.size()));
    DailyTemperature rec;
    try {
      rec.date = parse_iso_date(f[*date_col]);
    } catch (const ValidationError& e) {
      throw ParseError(number, e.what());
    }
    if (minmax) {
      const auto lo = parse_number<double>(f[*tmin_col]);
      const auto hi = parse_number<double>(f[*tmax_col]);
      if (!lo || !hi) throw ParseError(number, "malformed temperature value");
      rec.tmin = *lo;
      rec.tmax = *hi;
    } else {
      const auto avg = parse_number<double>(f[*tavg_col]);
      if (!avg) throw ParseError(number, "malformed temperature value");
      rec.tmin = rec.tmax = *avg;
    }
    if (rec.tmin > rec.tmax)
      throw ValidationError("line " + std::to_string(number) + ": tmin > tmax on " + format_iso_date(rec.date));
    records.push_back(rec);
  }
  return TemperatureSeries(std::move(records));
}

TemperatureSeries load_temperature(const std::filesystem::path& path, const TemperatureColumns& columns) {
  return parse_temperature_csv(read_file(path), columns);
}

void write_temperature_csv(std::ostream& out, const TemperatureSeries& series) {
  const bool all_equal = std::all_of(series.records().begin(), series.records().end(),
                                     [](const DailyTemperature& r) { return r.tmin == r.tmax; });
  out << (all_equal ? "date,tavg\n" : "date,tmin,tmax\n");
  // Shortest round-trip text, so written series read back bit-identical.
  auto put = [&](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
  };
  for (const auto& r : series.records()) {
    out << format_iso_date(r.date);
    put(r.tmin);
    if (!all_equal) put(r.tmax);
    out << '\n';
  }
}

TemperatureSeries fill_single_day_gaps(const TemperatureSeries& series) {
  std::vector<DailyTemperature> out;
  out.reserve(series.size() + series.gaps().size());
  const auto recs = series.records();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (i > 0 && days_between(recs[i - 1].date, recs[i].date) == 2) {
      out.push_back({add_days(recs[i - 1].date, 1), (recs[i - 1].tmin + recs[i].tmin) / 2.0,
                     (recs[i - 1].tmax + recs[i].tmax) / 2.0});
    }
    out.push_back(recs[i]);
  }
  return TemperatureSeries(std::move(out));
}

// ---------------------------------------------------------------------------

void BloomRecord::validate() const {
  const int len = days_in_year(year);
  if (day < 1 || day > len)
    throw ValidationError("day " + std::to_string(day) + " outside 1.." + std::to_string(len) + " for year " +
                          std::to_string(year));
}

std::vector<BloomRecord> parse_bloom_csv(std::string_view text) {
  const auto lines = read_lines(text);
  if (lines.size() <= 1) throw ParseError(0, "no records");
  const auto& header = lines.front().fields;
  const auto year_col = column(header, "year");
  const auto day_col = column(header, "bloom_day");
  const auto cens_col = column(header, "censored_at");
  if (!year_col || !day_col) throw ParseError(lines.front().number, "expected columns year,bloom_day");

  std::vector<BloomRecord> out;
  std::map<int, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& [number, f] = lines[i];
    if (f.size() != header.size())
      throw ParseError(number, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(f.size()));
    const auto year = parse_number<int>(f[*year_col]);
    if (!year) throw ParseError(number, "malformed year");
    BloomRecord rec;
    rec.year = *year;
    const std::string_view day = f[*day_col];
    const std::string_view cens = cens_col ? f[*cens_col] : std::string_view{};
    if (!day.empty() && day != "NA") {
      const auto d = parse_number<int>(day);
      if (!d) throw ParseError(number, "malformed bloom_day");
      if (!cens.empty() && cens != "NA") throw ParseError(number, "both bloom_day and censored_at given");
      rec = BloomRecord::observed(*year, *d);
    } else {
      const auto c = parse_number<int>(cens);
      if (!c) throw ParseError(number, "row has neither bloom_day nor censored_at");
      rec = BloomRecord::censored_at(*year, *c);
    }
    try {
      rec.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(number) + ": " + e.what());
    }
    if (!seen.emplace(rec.year, i).second)
      throw ValidationError("line " + std::to_string(number) + ": more than one event for year " +
                            std::to_string(rec.year));
    out.push_back(rec);
  }
  return out;
}

std::vector<BloomRecord> load_bloom(const std::filesystem::path& path) { return parse_bloom_csv(read_file(path)); }

void write_bloom_csv(std::ostream& out, std::span<const BloomRecord> records) {
  const bool any_censored =
      std::any_of(records.begin(), records.end(), [](const BloomRecord& r) { return r.censored; });
  out << (any_censored ? "year,bloom_day,censored_at\n" : "year,bloom_day\n");
  for (const auto& r : records) {
    out << r.year << ',';
    if (!r.censored) out << r.day;
    if (any_censored) {
      out << ',';
      if (r.censored) out << r.day;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

YearPanel::YearPanel(int year, std::vector<double> tavg, BloomRecord outcome)
    : year_(year), tavg_(std::move(tavg)), outcome_(outcome) {
  if (outcome_.year != year_) throw ValidationError("outcome year does not match panel year");
  outcome_.validate();
  if (length() > days_in_year()) throw ValidationError("panel longer than its calendar year");
  if (outcome_.day > length())
    throw ValidationError("temperatures for year " + std::to_string(year_) + " end before day " +
                          std::to_string(outcome_.day));
  for (double t : tavg_)
    if (!std::isfinite(t)) throw ValidationError("non-finite temperature in panel");
}

YearPanel YearPanel::unobserved(int year, std::vector<double> tavg) {
  const int n = std::max<int>(1, static_cast<int>(tavg.size()));
  if (tavg.empty()) tavg.push_back(0.0);
  return YearPanel(year, std::move(tavg), BloomRecord::censored_at(year, n));
}

std::vector<std::uint8_t> YearPanel::indicator_path() const {
  if (outcome_.censored) return std::vector<std::uint8_t>(static_cast<std::size_t>(outcome_.day), 0);
  std::vector<std::uint8_t> y(static_cast<std::size_t>(length()), 0);
  for (int t = outcome_.day; t <= length(); ++t) y[static_cast<std::size_t>(t - 1)] = 1;
  return y;
}

BloomRecord decode_indicator_path(int year, std::span<const std::uint8_t> path) {
  if (path.empty()) throw ValidationError("empty indicator path");
  std::optional<int> first;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path[i] > 1) throw ValidationError("indicator values must be 0 or 1");
    if (path[i] == 1 && !first) first = static_cast<int>(i) + 1;
    if (path[i] == 0 && first) throw ValidationError("indicator path decreases: the event is irreversible");
  }
  if (first) return BloomRecord::observed(year, *first);
  return BloomRecord::censored_at(year, static_cast<int>(path.size()));
}

YearPanel build_panel(const TemperatureSeries& series, const BloomRecord& record) {
  record.validate();
  auto tavg = series.contiguous_year_tavg(record.year);
  if (static_cast<int>(tavg.size()) < record.day) {
    // Reports the exact missing date.
    (void)series.year_tavg(record.year, record.day);
  }
  return YearPanel(record.year, std::move(tavg), record);
}

std::vector<YearPanel> build_panels(const TemperatureSeries& series, std::span<const BloomRecord> records) {
  std::vector<YearPanel> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(build_panel(series, r));
  return out;
}

// ---------------------------------------------------------------------------

double gdd(double tavg, double t_base) {
  if (!std::isfinite(tavg) || !std::isfinite(t_base)) throw ValidationError("gdd: non-finite input");
  return tavg > t_base ? tavg - t_base : 0.0;
}

std::vector<double> gdd_series(std::span<const double> tavg, double t_base) {
  std::vector<double> out(tavg.size());
  for (std::size_t i = 0; i < tavg.size(); ++i) out[i] = gdd(tavg[i], t_base);
  return out;
}

std::vector<double> agdd_series(std::span<const double> tavg, double t_base) {
  std::vector<double> out(tavg.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < tavg.size(); ++i) {
    sum += gdd(tavg[i], t_base);
    out[i] = sum;
  }
  return out;
}

std::vector<double> agdd_series(const YearPanel& panel, double t_base) { return agdd_series(panel.tavg(), t_base); }

std::vector<double> agdd_series(const TemperatureSeries& series, int year, int through_day, double t_base) {
  return agdd_series(series.year_tavg(year, through_day), t_base);
}

}  // namespace phenocast
