#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simvc {

/// Calendar date stored as a day count since 1970-01-01. Cheap to copy and
/// compare; all temporal-cutoff logic in the pipeline works on this type.
class Date {
public:
  Date() = default;

  static Date from_days(int days) { return Date(days); }

  static Date from_ymd(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year},
                                          std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
      throw std::invalid_argument("invalid calendar date");
    }
    return Date(std::chrono::sys_days{ymd}.time_since_epoch().count());
  }

  /// Parses "YYYY-MM-DD". Returns nullopt on any malformation.
  static std::optional<Date> parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
      if (iso[static_cast<size_t>(i)] < '0' || iso[static_cast<size_t>(i)] > '9') return std::nullopt;
    }
    y = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
    m = static_cast<unsigned>((iso[5] - '0') * 10 + (iso[6] - '0'));
    d = static_cast<unsigned>((iso[8] - '0') * 10 + (iso[9] - '0'));
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days{ymd}.time_since_epoch().count());
  }

  static Date parse_or_throw(std::string_view iso) {
    auto d = parse(iso);
    if (!d) throw std::invalid_argument("bad ISO date: " + std::string(iso));
    return *d;
  }

  int days() const { return days_; }

  Date add_days(int n) const { return Date(days_ + n); }

  int year() const { return int(ymd().year()); }
  int month() const { return int(unsigned(ymd().month())); }
  int day() const { return int(unsigned(ymd().day())); }

  std::string to_string() const {
    char buf[16];
    const auto v = ymd();
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(v.year()), unsigned(v.month()),
                  unsigned(v.day()));
    return buf;
  }

  /// "YYYY-MM", used for monthly evaluation windows.
  std::string month_key() const {
    char buf[12];
    const auto v = ymd();
    std::snprintf(buf, sizeof(buf), "%04d-%02u", int(v.year()), unsigned(v.month()));
    return buf;
  }

  auto operator<=>(const Date&) const = default;

private:
  explicit Date(int days) : days_(days) {}

  std::chrono::year_month_day ymd() const {
    return std::chrono::year_month_day{
        std::chrono::sys_days{std::chrono::days{days_}}};
  }

  int days_ = 0;
};

}  // namespace simvc
