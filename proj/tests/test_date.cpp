#include <catch2/catch_amalgamated.hpp>

#include "simvc/date.hpp"

using simvc::Date;

TEST_CASE("ISO parse and format round-trip") {
  for (const char* s : {"1970-01-01", "2020-02-29", "2021-12-31", "1999-06-15"}) {
    auto d = Date::parse(s);
    REQUIRE(d.has_value());
    CHECK(d->to_string() == s);
  }
}

TEST_CASE("malformed dates are rejected") {
  for (const char* s :
       {"2020-13-01", "2020-00-10", "2021-02-29", "2020-1-05", "20200105", "not-a-date", ""}) {
    CHECK_FALSE(Date::parse(s).has_value());
  }
}

TEST_CASE("ordering and day arithmetic") {
  const auto a = Date::parse_or_throw("2020-01-01");
  const auto b = Date::parse_or_throw("2020-12-31");
  CHECK(a < b);
  CHECK(a.add_days(365) == b);  // 2020 is a leap year
  CHECK(a.add_days(366).to_string() == "2021-01-01");
  CHECK(b.days() - a.days() == 365);
}

TEST_CASE("month key groups by calendar month") {
  CHECK(Date::parse_or_throw("2020-01-05").month_key() == "2020-01");
  CHECK(Date::parse_or_throw("2020-01-31").month_key() == "2020-01");
  CHECK(Date::parse_or_throw("2020-02-01").month_key() == "2020-02");
}
