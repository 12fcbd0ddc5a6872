#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mesval::harness {

inline constexpr int kSectorCount = 3;
inline constexpr std::array<const char*, kSectorCount> kSectorColumns = {"electricity_kw", "heat_kw", "cooling_kw"};
inline constexpr std::array<const char*, kSectorCount> kSectorLabels = {"e", "h", "c"};

/// Hours since 1970-01-01T00:00 UTC.
using HourStamp = std::int64_t;

HourStamp parse_timestamp(const std::string& text);  // ISO-8601, whole hours
std::string format_timestamp(HourStamp h);           // YYYY-MM-DDTHH:00:00
HourStamp parse_date(const std::string& ymd);        // midnight of YYYY-MM-DD
/// 0 = Monday.
int weekday(HourStamp h);

struct LoadSeries {
  std::vector<HourStamp> time;
  std::array<std::vector<double>, kSectorCount> load;  // kW
  std::string provenance;                              // "file:<path>" or "synthetic:<seed>"

  std::size_t size() const { return time.size(); }
  /// Whole days, requires the series to start at midnight.
  int days() const { return static_cast<int>(time.size() / 24); }
  HourStamp day_start(int day) const { return time.front() + 24 * day; }

  /// Throws DataError on non-increasing or non-hourly stamps, negative or
  /// non-finite loads, or mismatched column lengths.
  void validate() const;
};

/// CSV with header `timestamp,electricity_kw,heat_kw,cooling_kw`. Gaps are
/// rejected; errors carry the file line number.
LoadSeries load_series_csv(const std::string& path);
LoadSeries parse_series_csv(const std::string& text, const std::string& source = "<memory>");
std::string series_to_csv(const LoadSeries& s);
void write_series_csv(const LoadSeries& s, const std::string& path);

/// Deterministic synthetic loads: daily and weekly shapes, a seasonal trend
/// (heat peaks in winter, cooling in summer) and bounded noise. Starts at
/// midnight of `start_date`.
LoadSeries synth_data(std::uint64_t seed, int days, const std::string& start_date = "2016-01-01");

}  // namespace mesval::harness
