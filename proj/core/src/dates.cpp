#include "trendlens/dates.hpp"

#include <cstdio>

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

constexpr std::chrono::year_month_day make_ymd(int y, unsigned m, unsigned d) {
  return std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d};
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) : ymd_(make_ymd(year, month, day)) {
  if (!ymd_.ok()) {
    throw Error("invalid calendar date: " + iso());
  }
}

std::optional<Date> Date::try_parse(std::string_view iso) {
  // Strict YYYY-MM-DD; anything else (including trailing garbage) fails.
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto digits = [&](size_t pos, size_t len, int& out) {
    out = 0;
    for (size_t i = pos; i < pos + len; ++i) {
      if (iso[i] < '0' || iso[i] > '9') return false;
      out = out * 10 + (iso[i] - '0');
    }
    return true;
  };
  int y = 0, m = 0, d = 0;
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
  auto ymd = make_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

Date Date::parse(std::string_view iso) {
  auto d = try_parse(iso);
  if (!d) throw Error("invalid date '" + std::string(iso) + "' (expected YYYY-MM-DD)");
  return *d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

int Date::year() const { return static_cast<int>(ymd_.year()); }
unsigned Date::month() const { return static_cast<unsigned>(ymd_.month()); }
unsigned Date::day() const { return static_cast<unsigned>(ymd_.day()); }

std::int64_t Date::serial() const {
  return std::chrono::sys_days{ymd_}.time_since_epoch().count();
}

Date Date::from_serial(std::int64_t days_since_epoch) {
  std::chrono::sys_days sd{std::chrono::days{days_since_epoch}};
  return Date{std::chrono::year_month_day{sd}};
}

unsigned Date::days_in_month(int year, unsigned month) {
  using namespace std::chrono;
  year_month_day_last last{std::chrono::year{year} / std::chrono::month{month} / std::chrono::last};
  return static_cast<unsigned>(year_month_day{last}.day());
}

Date Date::first_of_month(int year, unsigned month) { return Date(year, month, 1); }

Date Date::last_of_month(int year, unsigned month) {
  return Date(year, month, days_in_month(year, month));
}

Date Date::plus_months_clamped(int months) const {
  int total = year() * 12 + static_cast<int>(month()) - 1 + months;
  int y = total / 12;
  int m = total % 12;
  if (m < 0) {
    m += 12;
    y -= 1;
  }
  unsigned target_month = static_cast<unsigned>(m + 1);
  unsigned d = std::min(day(), days_in_month(y, target_month));
  return Date(y, target_month, d);
}

}  // namespace trendlens
