#pragma once

#include "vinetail/stats.hpp"

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vinetail {

using Date = std::chrono::year_month_day;

Date parse_date(std::string_view text);
std::string format_date(const Date& d);
Date add_days(const Date& d, int days);

enum class Variable { price = 0, demand = 1, wind = 2, solar = 3 };
std::string_view variable_name(Variable v);

constexpr int kFirstSolarHour = 8;
constexpr int kLastSolarHour = 16;
constexpr bool has_solar(int hour) { return hour >= kFirstSolarHour && hour <= kLastSolarHour; }
constexpr int variable_count(int hour) { return has_solar(hour) ? 4 : 3; }

struct RawHourlyRecord {
  Date date;
  int hour = 0;
  double price = 0.0;
  double demand = 0.0;
  double wind = 0.0;
  double solar = 0.0;
  int line = 0;  // source line, 0 when synthesised
};

// Column names for the CSV reader. An empty solar column name means the
// file carries no solar column and solar is read as 0.
struct CsvSchema {
  std::string date = "date";
  std::string hour = "hour";
  std::string price = "price";
  std::string demand = "demand";
  std::string wind = "wind";
  std::string solar = "solar";
};

// Reads hourly records sorted by (date, hour). A calendar day holding exactly
// 25 records where a single hour appears twice is the autumn clock change and
// is passed through for fix_clock_changes; any other repeated key is a
// duplicate_key error.
std::vector<RawHourlyRecord> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
std::vector<RawHourlyRecord> read_csv(std::istream& in, const CsvSchema& schema = {},
                                      const std::string& source = "<stream>");
void write_csv(std::ostream& out, const std::vector<RawHourlyRecord>& records);

struct ClockAdjustment {
  enum class Kind { dropped_duplicate, interpolated, extrapolated };
  Date date;
  int hour = 0;
  Kind kind = Kind::dropped_duplicate;
};
std::string_view to_string(ClockAdjustment::Kind kind);

struct ClockFixResult {
  std::vector<RawHourlyRecord> records;
  std::vector<ClockAdjustment> adjustments;
};

// Normalises every calendar day to 24 records: a repeated hour keeps its
// first record, a single missing hour is linearly interpolated from the
// neighbouring hours of the same day (copied from the only neighbour at the
// day boundary). Two or more missing hours is an unrecoverable gap.
ClockFixResult fix_clock_changes(const std::vector<RawHourlyRecord>& records);

// T x 14 indicator matrix: January..December, Saturday, Sunday.
struct CalendarDummies {
  static constexpr int kColumns = 14;
  static constexpr int kSaturday = 12;
  static constexpr int kSunday = 13;
  MatrixXd matrix;
};

CalendarDummies build_dummies(const std::vector<Date>& dates);

// One hour-of-day slice: T consecutive days by 3 or 4 variables in the fixed
// order price, demand, wind[, solar]. Solar is present exactly for hours
// 8..16; the constructor enforces this together with the date invariants.
class HourlyPanel {
 public:
  HourlyPanel(int hour, std::vector<Date> dates, MatrixXd values);

  int hour() const noexcept { return hour_; }
  const std::vector<Date>& dates() const noexcept { return dates_; }
  const MatrixXd& values() const noexcept { return values_; }
  Index days() const noexcept { return values_.rows(); }
  Index variables() const noexcept { return values_.cols(); }
  std::vector<std::string> variable_names() const;

  // Rows [first, first + count).
  HourlyPanel window(Index first, Index count) const;

 private:
  int hour_;
  std::vector<Date> dates_;
  MatrixXd values_;
};

HourlyPanel slice_hour(const std::vector<RawHourlyRecord>& records, int hour);

// Plain CSV (date + variable columns) with shortest round-trip formatting.
void write_panel(std::ostream& out, const HourlyPanel& panel);
HourlyPanel read_panel(std::istream& in, int hour);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

}  // namespace vinetail
