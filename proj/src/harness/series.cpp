#include "mesval/harness/series.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "mesval/common/error.hpp"

namespace mesval::harness {

namespace {

constexpr const char* kModule = "cli_harness";

HourStamp civil_hours(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw DataError(kModule, fmt::format("invalid date {:04d}-{:02d}-{:02d}", y, m, d));
  return static_cast<HourStamp>(sys_days{ymd}.time_since_epoch().count()) * 24;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

HourStamp parse_timestamp(const std::string& text) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%4d-%2u-%2u%c%2u:%2u:%2u%n", &y, &mo, &d, &sep, &h, &mi, &s, &consumed);
  bool ok = n == 7 && (sep == 'T' || sep == ' ');
  if (ok) {
    const std::string rest = text.substr(consumed);
    ok = rest.empty() || rest == "Z" || rest == "+00:00";
  }
  if (!ok) {
    consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2u-%2u%c%2u:%2u%n", &y, &mo, &d, &sep, &h, &mi, &consumed) == 6 &&
        (sep == 'T' || sep == ' ') && static_cast<std::size_t>(consumed) == text.size()) {
      s = 0;
      ok = true;
    }
  }
  if (!ok) throw DataError(kModule, "bad timestamp '" + text + "' (expected YYYY-MM-DDTHH:MM:SS)");
  if (h > 23 || mi != 0 || s != 0) throw DataError(kModule, "timestamp '" + text + "' is not on a whole hour");
  return civil_hours(y, mo, d) + h;
}

std::string format_timestamp(HourStamp h) {
  using namespace std::chrono;
  const HourStamp day = h >= 0 ? h / 24 : (h - 23) / 24;
  const year_month_day ymd{sys_days{days{day}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00:00", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h - day * 24);
}

HourStamp parse_date(const std::string& ymd) {
  int y = 0;
  unsigned m = 0, d = 0;
  int consumed = 0;
  if (std::sscanf(ymd.c_str(), "%4d-%2u-%2u%n", &y, &m, &d, &consumed) != 3 ||
      static_cast<std::size_t>(consumed) != ymd.size())
    throw DataError(kModule, "bad date '" + ymd + "' (expected YYYY-MM-DD)");
  return civil_hours(y, m, d);
}

int weekday(HourStamp h) {
  // 1970-01-01 was a Thursday.
  const HourStamp day = h >= 0 ? h / 24 : (h - 23) / 24;
  return static_cast<int>(((day + 3) % 7 + 7) % 7);
}

void LoadSeries::validate() const {
  for (int s = 0; s < kSectorCount; ++s)
    if (load[s].size() != time.size())
      throw DataError(kModule, fmt::format("column {} has {} rows, timestamps {}", kSectorColumns[s], load[s].size(),
                                           time.size()));
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (i > 0 && time[i] != time[i - 1] + 1) {
      if (time[i] <= time[i - 1])
        throw DataError(kModule, fmt::format("row {}: timestamp {} not after {}", i, format_timestamp(time[i]),
                                             format_timestamp(time[i - 1])));
      throw DataError(kModule, fmt::format("row {}: gap, missing {}", i, format_timestamp(time[i - 1] + 1)));
    }
    for (int s = 0; s < kSectorCount; ++s)
      if (!std::isfinite(load[s][i]) || load[s][i] < 0.0)
        throw DataError(kModule, fmt::format("row {}: {} = {} is negative or not finite", i, kSectorColumns[s],
                                             load[s][i]));
  }
}

LoadSeries parse_series_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& what) { throw DataError(kModule, fmt::format("{}:{}: {}", source, lineno, what)); };

  if (!std::getline(in, line)) throw DataError(kModule, source + ": empty file");
  ++lineno;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv(line);
  std::array<int, kSectorCount + 1> col{-1, -1, -1, -1};
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "timestamp") col[0] = static_cast<int>(c);
    for (int s = 0; s < kSectorCount; ++s)
      if (header[c] == kSectorColumns[s]) col[s + 1] = static_cast<int>(c);
  }
  if (col[0] < 0) fail("missing column 'timestamp'");
  for (int s = 0; s < kSectorCount; ++s)
    if (col[s + 1] < 0) fail(fmt::format("missing column '{}'", kSectorColumns[s]));

  LoadSeries out;
  out.provenance = "file:" + source;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) fail(fmt::format("{} fields, header has {}", cells.size(), header.size()));
    HourStamp t = 0;
    try {
      t = parse_timestamp(cells[col[0]]);
    } catch (const DataError& e) {
      fail(std::string(e.what()).substr(e.module().size() + 2));  // drop the module prefix
    }
    if (!out.time.empty()) {
      if (t <= out.time.back())
        fail(fmt::format("timestamp {} is not after {}", cells[col[0]], format_timestamp(out.time.back())));
      if (t != out.time.back() + 1) {
        std::string missing = format_timestamp(out.time.back() + 1);
        if (t > out.time.back() + 2) missing += fmt::format(" .. {}", format_timestamp(t - 1));
        fail("gap in hourly data, missing " + missing);
      }
    }
    out.time.push_back(t);
    for (int s = 0; s < kSectorCount; ++s) {
      const std::string& cell = cells[col[s + 1]];
      double v = 0.0;
      std::size_t used = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size() || !std::isfinite(v))
        fail(fmt::format("{} '{}' is not a number", kSectorColumns[s], cell));
      if (v < 0.0) fail(fmt::format("negative {} {}", kSectorColumns[s], cell));
      out.load[s].push_back(v);
    }
  }
  if (out.time.empty()) throw DataError(kModule, source + ": no data rows");
  return out;
}

LoadSeries load_series_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError(kModule, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_series_csv(ss.str(), path);
}

std::string series_to_csv(const LoadSeries& s) {
  std::string out = "timestamp,electricity_kw,heat_kw,cooling_kw\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", format_timestamp(s.time[i]), s.load[0][i], s.load[1][i],
                       s.load[2][i]);
  return out;
}

void write_series_csv(const LoadSeries& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError(kModule, "cannot write " + path);
  f << series_to_csv(s);
}

LoadSeries synth_data(std::uint64_t seed, int days, const std::string& start_date) {
  if (days < 1) throw InvalidInput(kModule, "synth_data needs days >= 1");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const HourStamp start = parse_date(start_date);
  const HourStamp year_start = parse_date(format_timestamp(start).substr(0, 4) + "-01-01");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  LoadSeries s;
  s.provenance = fmt::format("synthetic:{}", seed);
  std::array<double, kSectorCount> drift{};  // slowly varying part of the noise
  for (HourStamp k = 0; k < 24 * static_cast<HourStamp>(days); ++k) {
    const HourStamp t = start + k;
    const double hour = static_cast<double>(t % 24);
    const double doy = static_cast<double>((t - year_start) / 24 % 365);
    const bool weekend = weekday(t) >= 5;
    // +1 in mid-January, -1 in mid-July
    const double winter = std::cos(two_pi * (doy - 15.0) / 365.0);
    const double office = std::exp(-0.5 * std::pow((hour - 14.0) / 4.0, 2.0));

    std::array<double, kSectorCount> base;
    base[0] = 560.0 + 220.0 * office * (weekend ? 0.6 : 1.0) + 60.0 * std::sin(two_pi * (hour - 9.0) / 24.0) -
              40.0 * winter;
    base[1] = 420.0 + 260.0 * winter + 110.0 * std::cos(two_pi * (hour - 5.0) / 24.0) - (weekend ? 30.0 : 0.0);
    base[2] = 330.0 - 230.0 * winter + 150.0 * office * (weekend ? 0.7 : 1.0) +
              40.0 * std::sin(two_pi * (hour - 10.0) / 24.0);
    s.time.push_back(t);
    for (int j = 0; j < kSectorCount; ++j) {
      drift[j] = 0.8 * drift[j] + 0.2 * u(rng);
      const double noise = 0.06 * drift[j] + 0.04 * u(rng);  // |noise| < 10%
      s.load[j].push_back(std::max(base[j], 40.0) * (1.0 + noise));
    }
  }
  return s;
}

}  // namespace mesval::harness
