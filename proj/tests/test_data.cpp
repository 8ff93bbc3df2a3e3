#include <doctest.h>

#include "vinetail/data.hpp"
#include "vinetail/error.hpp"
#include "vinetail/rng.hpp"

#include <cstring>
#include <map>
#include <sstream>

using namespace vinetail;

namespace {

std::vector<RawHourlyRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in, {}, "mem");
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::io;
}

std::vector<RawHourlyRecord> full_day(const std::string& date, double base) {
  std::vector<RawHourlyRecord> out;
  for (int h = 0; h < 24; ++h) {
    RawHourlyRecord r;
    r.date = parse_date(date);
    r.hour = h;
    r.price = base + h;
    r.demand = 10.0 * (base + h);
    r.wind = 2.0 * h;
    r.solar = h >= 8 && h <= 16 ? 1.0 * h : 0.0;
    out.push_back(r);
  }
  return out;
}

// Zeller's congruence: 0 = Saturday, 1 = Sunday, ..., 6 = Friday.
int zeller(int y, int m, int d) {
  if (m < 3) {
    m += 12;
    y -= 1;
  }
  const int k = y % 100, j = y / 100;
  return (d + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
}

}  // namespace

TEST_CASE("load_csv orders records and keeps negative prices") {
  const auto recs = parse(
      "date,hour,price,demand,wind,solar\n"
      "2015-03-04,2,-12.5,50000,3000,0\n"
      "2015-03-04,0,30.0,48000,3100,0\n"
      "2015-03-04,1,28.0,47000,3050,0\n");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].hour == 0);
  CHECK(recs[1].hour == 1);
  CHECK(recs[2].hour == 2);
  CHECK(recs[2].price == doctest::Approx(-12.5));
  CHECK(recs[2].line == 2);
}

TEST_CASE("load_csv reports duplicate keys, schema and row errors") {
  try {
    parse("date,hour,price,demand,wind,solar\n2015-03-04,5,1,2,3,0\n2015-03-04,5,1,2,3,0\n");
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::duplicate_key);
    CHECK(std::string(e.what()).find("2015-03-04 hour 5") != std::string::npos);
  }
  CHECK(code_of([] { parse("date,hour,price,demand\n2015-03-04,5,1,2\n"); }) == ErrorCode::schema);
  try {
    parse("date,hour,price,demand,wind,solar\n2015-03-04,5,1,2,3,0\n2015/03/05,5,1,2,3,0\n");
    FAIL("bad date accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::row);
    CHECK(e.location() == "mem:3");
  }
  CHECK(code_of([] { parse("date,hour,price,demand,wind,solar\n2015-03-04,24,1,2,3,0\n"); }) == ErrorCode::row);
  CHECK(code_of([] { parse("date,hour,price,demand,wind,solar\n2015-03-04,1,abc,2,3,0\n"); }) == ErrorCode::row);
}

TEST_CASE("schema remapping and missing solar column") {
  CsvSchema schema;
  schema.date = "day";
  schema.hour = "h";
  schema.price = "p";
  schema.demand = "load";
  schema.wind = "w";
  schema.solar = "";
  std::istringstream in("day,h,p,load,w\n2016-01-01,3,40,50,60\n");
  const auto recs = read_csv(in, schema);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].demand == 50.0);
  CHECK(recs[0].solar == 0.0);
}

TEST_CASE("autumn changeover day passes load and is repaired") {
  auto day = full_day("2016-10-30", 20.0);
  RawHourlyRecord dup = day[2];
  dup.price = 999.0;
  day.insert(day.begin() + 3, dup);
  std::ostringstream csv;
  write_csv(csv, day);
  const auto loaded = parse(csv.str());
  REQUIRE(loaded.size() == 25);

  const auto fixed = fix_clock_changes(loaded);
  REQUIRE(fixed.records.size() == 24);
  CHECK(fixed.records[2].price == 22.0);  // first occurrence kept
  REQUIRE(fixed.adjustments.size() == 1);
  CHECK(fixed.adjustments[0].kind == ClockAdjustment::Kind::dropped_duplicate);
  CHECK(fixed.adjustments[0].hour == 2);
}

TEST_CASE("fix_clock_changes") {
  SUBCASE("intact day unchanged") {
    const auto day = full_day("2016-05-10", 5.0);
    const auto fixed = fix_clock_changes(day);
    REQUIRE(fixed.records.size() == 24);
    CHECK(fixed.adjustments.empty());
    for (int h = 0; h < 24; ++h) CHECK(fixed.records[static_cast<std::size_t>(h)].price == day[static_cast<std::size_t>(h)].price);
  }
  SUBCASE("spring gap is the midpoint of its neighbours") {
    auto day = full_day("2016-03-27", 0.0);
    day[1].price = day[1].demand = day[1].wind = day[1].solar = 10.0;
    day[3].price = day[3].demand = day[3].wind = day[3].solar = 20.0;
    day.erase(day.begin() + 2);
    const auto fixed = fix_clock_changes(day);
    REQUIRE(fixed.records.size() == 24);
    const auto& r = fixed.records[2];
    CHECK(r.hour == 2);
    CHECK(r.price == 15.0);
    CHECK(r.demand == 15.0);
    CHECK(r.wind == 15.0);
    CHECK(r.solar == 15.0);
    CHECK(fixed.adjustments.at(0).kind == ClockAdjustment::Kind::interpolated);
  }
  SUBCASE("two missing hours is unrecoverable") {
    auto day = full_day("2016-03-27", 0.0);
    day.erase(day.begin() + 5);
    day.erase(day.begin() + 2);
    CHECK(code_of([&] { fix_clock_changes(day); }) == ErrorCode::unrecoverable_gap);
  }
  SUBCASE("every day has 24 hours afterwards") {
    Rng rng(3);
    std::vector<RawHourlyRecord> all;
    for (int d = 0; d < 30; ++d) {
      auto day = full_day(format_date(add_days(parse_date("2017-01-01"), d)), d);
      const double coin = rng.uniform();
      if (coin < 0.3) day.erase(day.begin() + 1 + static_cast<long>(rng.uniform() * 22));
      else if (coin < 0.6) day.insert(day.begin() + 4, day[3]);
      all.insert(all.end(), day.begin(), day.end());
    }
    const auto fixed = fix_clock_changes(all);
    CHECK(fixed.records.size() == 30 * 24);
    std::map<std::string, int> per_day;
    for (const auto& r : fixed.records) ++per_day[format_date(r.date)];
    for (const auto& [d, c] : per_day) CHECK(c == 24);
  }
}

TEST_CASE("build_dummies") {
  const auto wed = build_dummies({parse_date("2017-03-15")});  // a Wednesday
  CHECK(wed.matrix.cols() == 14);
  CHECK(wed.matrix(0, 2) == 1.0);
  CHECK(wed.matrix.row(0).sum() == 1.0);

  const auto sat = build_dummies({parse_date("2017-12-16")});  // a Saturday
  CHECK(sat.matrix(0, 11) == 1.0);
  CHECK(sat.matrix(0, CalendarDummies::kSaturday) == 1.0);
  CHECK(sat.matrix(0, CalendarDummies::kSunday) == 0.0);

  // calendar enumeration oracle for 2019 (non-leap)
  std::vector<Date> dates;
  for (int i = 0; i < 365; ++i) dates.push_back(add_days(parse_date("2019-01-01"), i));
  const auto d = build_dummies(dates);
  const int month_len[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int sat_count = 0, sun_count = 0;
  for (int m = 1; m <= 12; ++m) {
    for (int day = 1; day <= month_len[m - 1]; ++day) {
      const int w = zeller(2019, m, day);
      sat_count += w == 0;
      sun_count += w == 1;
    }
  }
  const Eigen::RowVectorXd sums = d.matrix.colwise().sum();
  for (int m = 0; m < 12; ++m) CHECK(sums(m) == month_len[m]);
  CHECK(sums(12) == sat_count);
  CHECK(sums(13) == sun_count);
  for (Index t = 0; t < d.matrix.rows(); ++t) {
    const double s = d.matrix.row(t).sum();
    CHECK((s == 1.0 || s == 2.0));
    CHECK(d.matrix(t, 12) + d.matrix(t, 13) <= 1.0);
  }
}

TEST_CASE("slice_hour") {
  std::vector<RawHourlyRecord> recs;
  for (int d = 0; d < 5; ++d) {
    auto day = full_day(format_date(add_days(parse_date("2018-06-01"), d)), d);
    recs.insert(recs.end(), day.begin(), day.end());
  }
  for (int h = 0; h < 24; ++h) {
    const auto p = slice_hour(recs, h);
    CHECK(p.days() == 5);
    CHECK((p.variables() == 4) == (h >= 8 && h <= 16));
  }
  const auto noon = slice_hour(recs, 12);
  CHECK(noon.variables() == 4);
  CHECK(noon.variable_names() == std::vector<std::string>{"price", "demand", "wind", "solar"});
  CHECK(noon.values()(2, 0) == 14.0);
  CHECK(slice_hour(recs, 3).variables() == 3);
  CHECK(code_of([&] { slice_hour(recs, 24); }) == ErrorCode::domain);

  // remove day 3 for hour 7
  std::erase_if(recs, [](const RawHourlyRecord& r) { return r.hour == 7 && r.date == parse_date("2018-06-03"); });
  try {
    slice_hour(recs, 7);
    FAIL("gap accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_day);
    CHECK(e.location() == "2018-06-03");
  }
}

TEST_CASE("panel serialisation round-trips bit-exactly") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int hour = static_cast<int>(rng.uniform() * 24);
    const int n = variable_count(hour);
    const Index days = 1 + static_cast<Index>(rng.uniform() * 40);
    MatrixXd v(days, n);
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal() * std::pow(10.0, rng.uniform() * 12 - 6);
    std::vector<Date> dates;
    for (Index t = 0; t < days; ++t) dates.push_back(add_days(parse_date("2012-02-27"), static_cast<int>(t)));
    const HourlyPanel panel(hour, dates, v);
    std::stringstream buf;
    write_panel(buf, panel);
    const auto back = read_panel(buf, hour);
    REQUIRE(back.values().rows() == days);
    CHECK(std::memcmp(back.values().data(), v.data(), sizeof(double) * static_cast<std::size_t>(v.size())) == 0);
    CHECK(back.dates() == dates);
  }
}

TEST_CASE("panel invariants are enforced by construction") {
  const std::vector<Date> dates{parse_date("2018-01-01"), parse_date("2018-01-02")};
  CHECK(code_of([&] { HourlyPanel(3, dates, MatrixXd::Zero(2, 4)); }) == ErrorCode::domain);
  CHECK(code_of([&] { HourlyPanel(12, dates, MatrixXd::Zero(2, 3)); }) == ErrorCode::domain);
  CHECK(code_of([&] {
          HourlyPanel(12, {parse_date("2018-01-01"), parse_date("2018-01-03")}, MatrixXd::Zero(2, 4));
        }) == ErrorCode::missing_day);
}
