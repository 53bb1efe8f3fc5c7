#include <doctest.h>

#include "trendlens/dates.hpp"
#include "trendlens/errors.hpp"

using trendlens::Date;

TEST_CASE("iso parse and format round-trip") {
  for (const char* iso : {"1970-01-01", "2024-02-29", "2025-12-31", "0001-01-01"}) {
    CHECK(Date::parse(iso).iso() == iso);
  }
}

TEST_CASE("invalid dates are rejected") {
  CHECK_FALSE(Date::try_parse("2025-02-29"));
  CHECK_FALSE(Date::try_parse("2025-13-01"));
  CHECK_FALSE(Date::try_parse("2025-00-10"));
  CHECK_FALSE(Date::try_parse("2025-1-1"));
  CHECK_FALSE(Date::try_parse("not a date"));
  CHECK_FALSE(Date::try_parse("2025-06-01 "));
  CHECK_THROWS_AS(Date::parse("garbage"), trendlens::Error);
}

TEST_CASE("serial round-trip and ordering") {
  Date a = Date::parse("2024-12-31");
  Date b = Date::parse("2025-01-01");
  CHECK(a < b);
  CHECK(b.serial() == a.serial() + 1);
  CHECK(Date::from_serial(a.serial()) == a);
  CHECK(a.plus_days(1) == b);
}

TEST_CASE("month arithmetic clamps the day") {
  CHECK(Date::parse("2025-03-31").plus_months_clamped(-1).iso() == "2025-02-28");
  CHECK(Date::parse("2024-03-31").plus_months_clamped(-1).iso() == "2024-02-29");
  CHECK(Date::parse("2026-06-01").plus_months_clamped(-3).iso() == "2026-03-01");
  CHECK(Date::parse("2026-02-15").plus_months_clamped(-3).iso() == "2025-11-15");
  CHECK(Date::parse("2025-01-31").plus_months_clamped(1).iso() == "2025-02-28");
  CHECK(Date::parse("2025-11-30").plus_months_clamped(2).iso() == "2026-01-30");
}

TEST_CASE("days_in_month handles leap years") {
  CHECK(Date::days_in_month(2024, 2) == 29);
  CHECK(Date::days_in_month(2025, 2) == 28);
  CHECK(Date::days_in_month(2025, 12) == 31);
  CHECK(Date::last_of_month(2024, 2).iso() == "2024-02-29");
}
