#include <doctest.h>

#include "gridlag/civil_time.hpp"
#include "gridlag/csv.hpp"

#include <sstream>

using namespace gridlag;

TEST_CASE("timestamps parse in both export styles") {
    auto a = parse_timestamp("2019-03-05 17:04:09");
    auto b = parse_timestamp("03/05/2019 05:04:09 PM");
    REQUIRE(a);
    REQUIRE(b);
    CHECK(*a == *b);
    CHECK(a->hour() == 17);
    CHECK(a->year() == 2019);
    CHECK(parse_timestamp("12/31/2019 12:00:00 AM")->hour() == 0);
    CHECK(parse_timestamp("12/31/2019 12:30:00 PM")->hour() == 12);
    CHECK_FALSE(parse_timestamp("2019-02-30 10:00"));
    CHECK_FALSE(parse_timestamp("not a time"));
}

TEST_CASE("formatting round-trips") {
    const auto t = *parse_timestamp("2019-11-03T01:59:59");
    CHECK(*parse_timestamp(format_us(t)) == t);
    CHECK(*parse_timestamp(format_iso(t)) == t);
    CHECK(format_compact_date(t.day) == "20191103");
    CHECK(LocalDateTime::from_epoch_seconds(t.epoch_seconds()) == t);
}

TEST_CASE("the US spring-forward hour does not exist") {
    CHECK(is_nonexistent_hour(make_day(2019, 3, 10), 2, DstRule::us));
    CHECK_FALSE(is_nonexistent_hour(make_day(2019, 3, 10), 3, DstRule::us));
    CHECK_FALSE(is_nonexistent_hour(make_day(2019, 3, 3), 2, DstRule::us));
    CHECK(is_nonexistent_hour(make_day(2020, 3, 8), 2, DstRule::us));
    CHECK_FALSE(is_nonexistent_hour(make_day(2019, 3, 10), 2, DstRule::none));
}

TEST_CASE("calendar year has 8760 hours and indexes are consistent") {
    const auto y = DayRange::calendar_year(2019);
    CHECK(y.hours() == 8760);
    CHECK(DayRange::calendar_year(2020).hours() == 8784);
    for (std::int64_t h : {0, 1, 23, 24, 4000, 8759}) CHECK(y.hour_index(y.hour_start(h)) == h);
    CHECK(y.hour_index(make_day(2020, 1, 1), 0) == -1);
    CHECK(y.hour_index(make_day(2018, 12, 31), 23) == -1);
}

TEST_CASE("csv reader handles quoting") {
    std::istringstream in("a,\"b,c\",\"d\"\"e\"\n\"multi\nline\",x,y\n");
    csv::Reader r(in);
    std::vector<std::string> f;
    REQUIRE(r.next(f));
    CHECK(f == std::vector<std::string>{"a", "b,c", "d\"e"});
    REQUIRE(r.next(f));
    CHECK(f[0] == "multi\nline");
    CHECK_FALSE(r.next(f));
    CHECK(csv::escape("p,q") == "\"p,q\"");
    CHECK(std::stod(csv::num(0.1)) == 0.1);
}
