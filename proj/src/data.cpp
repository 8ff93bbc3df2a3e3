#include "vinetail/data.hpp"

#include "vinetail/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace vinetail {

namespace {

using std::chrono::day;
using std::chrono::days;
using std::chrono::month;
using std::chrono::sys_days;
using std::chrono::year;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool operator_less(const RawHourlyRecord& a, const RawHourlyRecord& b) {
  if (a.date != b.date) return a.date < b.date;
  return a.hour < b.hour;
}

std::string key_of(const Date& d, int hour) { return format_date(d) + " hour " + std::to_string(hour); }

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0, m = 0, d = 0;
  const bool shape = text.size() == 10 && text[4] == '-' && text[7] == '-';
  if (!shape || !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    throw Error(ErrorCode::row, "unparseable date '" + std::string(text) + "'");
  }
  const Date date{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw Error(ErrorCode::row, "invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date add_days(const Date& d, int n) { return Date{sys_days{d} + days{n}}; }

std::string_view variable_name(Variable v) {
  switch (v) {
    case Variable::price: return "price";
    case Variable::demand: return "demand";
    case Variable::wind: return "wind";
    case Variable::solar: return "solar";
  }
  return "?";
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<RawHourlyRecord> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string(), path.string());
  return read_csv(in, schema, path.string());
}

std::vector<RawHourlyRecord> read_csv(std::istream& in, const CsvSchema& schema, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::schema, "empty input: missing header row", source);
  const auto header = split(line);

  auto column = [&](const std::string& name, bool required) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    if (required) throw Error(ErrorCode::schema, "missing column '" + name + "'", source + ":1");
    return -1;
  };
  const int c_date = column(schema.date, true);
  const int c_hour = column(schema.hour, true);
  const int c_price = column(schema.price, true);
  const int c_demand = column(schema.demand, true);
  const int c_wind = column(schema.wind, true);
  const int c_solar = schema.solar.empty() ? -1 : column(schema.solar, false);

  std::vector<RawHourlyRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto fields = split(line);
    const int needed = std::max({c_date, c_hour, c_price, c_demand, c_wind, c_solar});
    if (static_cast<int>(fields.size()) <= needed)
      throw Error(ErrorCode::row, "too few fields", where);

    RawHourlyRecord r;
    r.line = line_no;
    try {
      r.date = parse_date(fields[static_cast<std::size_t>(c_date)]);
    } catch (const Error& e) {
      throw Error(ErrorCode::row, e.what(), where);
    }
    if (!parse_int(fields[static_cast<std::size_t>(c_hour)], r.hour) || r.hour < 0 || r.hour > 23)
      throw Error(ErrorCode::row, "hour must be an integer in 0..23", where);

    auto value = [&](int col, const char* name, double& out) {
      if (!parse_number(fields[static_cast<std::size_t>(col)], out))
        throw Error(ErrorCode::row, std::string("unparseable ") + name + " value", where);
    };
    value(c_price, "price", r.price);
    value(c_demand, "demand", r.demand);
    value(c_wind, "wind", r.wind);
    if (c_solar >= 0 && !fields[static_cast<std::size_t>(c_solar)].empty()) value(c_solar, "solar", r.solar);
    records.push_back(r);
  }

  std::stable_sort(records.begin(), records.end(), operator_less);

  // duplicate keys: tolerated only in the autumn changeover shape
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].date == records[i].date) ++j;
    std::array<int, 24> count{};
    int repeated = 0;
    const RawHourlyRecord* first_dup = nullptr;
    for (std::size_t k = i; k < j; ++k) {
      if (++count[static_cast<std::size_t>(records[k].hour)] == 2) {
        ++repeated;
        if (!first_dup) first_dup = &records[k];
      }
    }
    const bool autumn_shape = (j - i) == 25 && repeated == 1 &&
                              std::all_of(count.begin(), count.end(), [](int c) { return c >= 1 && c <= 2; });
    if (first_dup && !autumn_shape) {
      throw Error(ErrorCode::duplicate_key, "duplicate record for " + key_of(first_dup->date, first_dup->hour),
                  source + ":" + std::to_string(first_dup->line));
    }
    i = j;
  }
  return records;
}

void write_csv(std::ostream& out, const std::vector<RawHourlyRecord>& records) {
  out << "date,hour,price,demand,wind,solar\n";
  for (const auto& r : records) {
    out << format_date(r.date) << ',' << r.hour << ',' << format_double(r.price) << ','
        << format_double(r.demand) << ',' << format_double(r.wind) << ',' << format_double(r.solar) << '\n';
  }
}

std::string_view to_string(ClockAdjustment::Kind kind) {
  switch (kind) {
    case ClockAdjustment::Kind::dropped_duplicate: return "dropped_duplicate";
    case ClockAdjustment::Kind::interpolated: return "interpolated";
    case ClockAdjustment::Kind::extrapolated: return "extrapolated";
  }
  return "?";
}

ClockFixResult fix_clock_changes(const std::vector<RawHourlyRecord>& records) {
  ClockFixResult out;
  out.records.reserve(records.size());
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].date == records[i].date) ++j;
    const Date date = records[i].date;

    std::array<const RawHourlyRecord*, 24> slot{};
    for (std::size_t k = i; k < j; ++k) {
      const auto& r = records[k];
      if (k > i && operator_less(r, records[k - 1]))
        throw Error(ErrorCode::domain, "records not sorted by timestamp", key_of(r.date, r.hour));
      auto& s = slot[static_cast<std::size_t>(r.hour)];
      if (s) {
        out.adjustments.push_back({date, r.hour, ClockAdjustment::Kind::dropped_duplicate});
      } else {
        s = &r;
      }
    }

    const auto missing = std::count(slot.begin(), slot.end(), nullptr);
    if (missing > 1) {
      throw Error(ErrorCode::unrecoverable_gap,
                  std::to_string(missing) + " hours missing on " + format_date(date), format_date(date));
    }
    for (int h = 0; h < 24; ++h) {
      const auto* r = slot[static_cast<std::size_t>(h)];
      if (r) {
        out.records.push_back(*r);
        continue;
      }
      RawHourlyRecord fill;
      fill.date = date;
      fill.hour = h;
      if (h == 0 || h == 23) {
        const auto* nb = slot[static_cast<std::size_t>(h == 0 ? 1 : 22)];
        fill.price = nb->price;
        fill.demand = nb->demand;
        fill.wind = nb->wind;
        fill.solar = nb->solar;
        out.adjustments.push_back({date, h, ClockAdjustment::Kind::extrapolated});
      } else {
        const auto* a = slot[static_cast<std::size_t>(h - 1)];
        const auto* b = slot[static_cast<std::size_t>(h + 1)];
        fill.price = 0.5 * (a->price + b->price);
        fill.demand = 0.5 * (a->demand + b->demand);
        fill.wind = 0.5 * (a->wind + b->wind);
        fill.solar = 0.5 * (a->solar + b->solar);
        out.adjustments.push_back({date, h, ClockAdjustment::Kind::interpolated});
      }
      out.records.push_back(fill);
    }
    i = j;
  }
  return out;
}

CalendarDummies build_dummies(const std::vector<Date>& dates) {
  CalendarDummies d;
  d.matrix = MatrixXd::Zero(static_cast<Index>(dates.size()), CalendarDummies::kColumns);
  for (std::size_t t = 0; t < dates.size(); ++t) {
    const auto row = static_cast<Index>(t);
    d.matrix(row, static_cast<Index>(static_cast<unsigned>(dates[t].month()) - 1)) = 1.0;
    const std::chrono::weekday wd{sys_days{dates[t]}};
    if (wd == std::chrono::Saturday) d.matrix(row, CalendarDummies::kSaturday) = 1.0;
    if (wd == std::chrono::Sunday) d.matrix(row, CalendarDummies::kSunday) = 1.0;
  }
  return d;
}

HourlyPanel::HourlyPanel(int hour, std::vector<Date> dates, MatrixXd values)
    : hour_(hour), dates_(std::move(dates)), values_(std::move(values)) {
  if (hour_ < 0 || hour_ > 23) throw Error(ErrorCode::domain, "hour must be in 0..23", std::to_string(hour_));
  if (static_cast<Index>(dates_.size()) != values_.rows())
    throw Error(ErrorCode::domain, "panel dates and rows differ in length");
  if (values_.cols() != variable_count(hour_))
    throw Error(ErrorCode::domain, "hour " + std::to_string(hour_) + " requires " +
                                       std::to_string(variable_count(hour_)) + " variables");
  for (std::size_t t = 1; t < dates_.size(); ++t) {
    if (sys_days{dates_[t]} - sys_days{dates_[t - 1]} != std::chrono::days{1})
      throw Error(ErrorCode::missing_day, "panel dates are not consecutive days", format_date(dates_[t]));
  }
  if (!values_.allFinite()) throw Error(ErrorCode::domain, "panel contains non-finite values");
}

std::vector<std::string> HourlyPanel::variable_names() const {
  std::vector<std::string> names;
  for (Index j = 0; j < values_.cols(); ++j) names.emplace_back(variable_name(static_cast<Variable>(j)));
  return names;
}

HourlyPanel HourlyPanel::window(Index first, Index count) const {
  if (first < 0 || count < 1 || first + count > days())
    throw Error(ErrorCode::domain, "window outside panel range");
  std::vector<Date> d(dates_.begin() + first, dates_.begin() + first + count);
  return HourlyPanel(hour_, std::move(d), values_.middleRows(first, count));
}

HourlyPanel slice_hour(const std::vector<RawHourlyRecord>& records, int hour) {
  if (hour < 0 || hour > 23) throw Error(ErrorCode::domain, "hour must be in 0..23", std::to_string(hour));
  std::vector<const RawHourlyRecord*> rows;
  for (const auto& r : records)
    if (r.hour == hour) rows.push_back(&r);
  if (rows.empty()) throw Error(ErrorCode::missing_day, "no records for hour " + std::to_string(hour));
  std::stable_sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->date < b->date; });

  std::vector<std::string> missing;
  std::size_t n_missing = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k]->date == rows[k - 1]->date)
      throw Error(ErrorCode::duplicate_key, "duplicate record for " + key_of(rows[k]->date, hour));
    for (Date d = add_days(rows[k - 1]->date, 1); d != rows[k]->date; d = add_days(d, 1)) {
      if (missing.size() < 20) missing.push_back(format_date(d));
      ++n_missing;
    }
  }
  if (n_missing > 0) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ",") + m;
    if (n_missing > missing.size()) list += ",...";
    throw Error(ErrorCode::missing_day,
                std::to_string(n_missing) + " day(s) missing for hour " + std::to_string(hour), list);
  }

  const int n = variable_count(hour);
  MatrixXd values(static_cast<Index>(rows.size()), n);
  std::vector<Date> dates;
  dates.reserve(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const auto* r = rows[t];
    const auto row = static_cast<Index>(t);
    values(row, 0) = r->price;
    values(row, 1) = r->demand;
    values(row, 2) = r->wind;
    if (n == 4) values(row, 3) = r->solar;
    dates.push_back(r->date);
  }
  return HourlyPanel(hour, std::move(dates), std::move(values));
}

void write_panel(std::ostream& out, const HourlyPanel& panel) {
  out << "date";
  for (const auto& name : panel.variable_names()) out << ',' << name;
  out << '\n';
  for (Index t = 0; t < panel.days(); ++t) {
    out << format_date(panel.dates()[static_cast<std::size_t>(t)]);
    for (Index j = 0; j < panel.variables(); ++j) out << ',' << format_double(panel.values()(t, j));
    out << '\n';
  }
}

HourlyPanel read_panel(std::istream& in, int hour) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::schema, "empty panel input");
  const auto n_cols = static_cast<Index>(split(line).size()) - 1;
  std::vector<Date> dates;
  std::vector<double> flat;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (static_cast<Index>(fields.size()) != n_cols + 1)
      throw Error(ErrorCode::row, "wrong field count", "line " + std::to_string(line_no));
    dates.push_back(parse_date(fields[0]));
    for (Index j = 0; j < n_cols; ++j) {
      double v = 0.0;
      if (!parse_number(fields[static_cast<std::size_t>(j + 1)], v))
        throw Error(ErrorCode::row, "unparseable value", "line " + std::to_string(line_no));
      flat.push_back(v);
    }
  }
  MatrixXd values(static_cast<Index>(dates.size()), n_cols);
  for (Index t = 0; t < values.rows(); ++t)
    for (Index j = 0; j < n_cols; ++j) values(t, j) = flat[static_cast<std::size_t>(t * n_cols + j)];
  return HourlyPanel(hour, std::move(dates), std::move(values));
}

}  // namespace vinetail
