#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace trendlens {

// Calendar date (no time-of-day). Thin wrapper over std::chrono so the rest
// of the codebase deals in ISO strings and day arithmetic only.
class Date {
 public:
  Date() : Date(1970, 1, 1) {}
  Date(int year, unsigned month, unsigned day);

  // Throws trendlens::Error on anything that is not a valid YYYY-MM-DD date.
  static Date parse(std::string_view iso);
  static std::optional<Date> try_parse(std::string_view iso);

  std::string iso() const;

  int year() const;
  unsigned month() const;  // 1..12
  unsigned day() const;    // 1..31

  // Days since 1970-01-01; usable as a dense serial for sampling and diffs.
  std::int64_t serial() const;
  static Date from_serial(std::int64_t days_since_epoch);

  Date plus_days(std::int64_t n) const { return from_serial(serial() + n); }

  // Calendar-month shift; the day is clamped to the target month's length
  // (2025-03-31 minus 1 month -> 2025-02-28).
  Date plus_months_clamped(int months) const;

  static unsigned days_in_month(int year, unsigned month);
  static Date first_of_month(int year, unsigned month);
  static Date last_of_month(int year, unsigned month);

  auto operator<=>(const Date&) const = default;

 private:
  std::chrono::year_month_day ymd_;
  explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}
};

}  // namespace trendlens
