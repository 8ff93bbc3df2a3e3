#include "vinetail/error.hpp"
#include "vinetail/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace vinetail;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool force = false;

  std::string input;
  CsvSchema schema;
  std::string hours;
  int hour = -1;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::string pattern;
  std::optional<Index> window;
  std::optional<Index> step;
  std::string families;
  std::string pit;
  bool series = false;

  // synth
  Index days = 800;
  std::string start = "2015-01-01";
  std::string preset = "gaussian";
  bool clock_changes = false;
  double break_fraction = 0.0;
  std::string output;

  // simulate
  std::string model;
  Index n = 10000;
};

fs::path out_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("VINETAIL_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

void write_file(const fs::path& p, const std::string& text, bool force) {
  if (!force && fs::exists(p)) throw Error(ErrorCode::exists, "output file exists; pass --force to overwrite", p.string());
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write file", p.string());
  out << text;
}

std::string two_digits(int h) { return (h < 10 ? "0" : "") + std::to_string(h); }

AnalysisConfig build_config(const Options& o) {
  AnalysisConfig c;
  if (!o.config_path.empty()) c = apply_config(c, read_config_file(o.config_path));
  std::map<std::string, std::string> overrides;
  if (!o.hours.empty()) overrides["hours"] = o.hours;
  if (o.hour >= 0) overrides["hours"] = std::to_string(o.hour);
  if (!o.families.empty()) overrides["families"] = o.families;
  if (!o.pit.empty()) overrides["pit"] = o.pit;
  if (!o.pattern.empty()) overrides["scenarios"] = o.pattern;
  c = apply_config(c, overrides);
  if (o.alpha) c.alpha = *o.alpha;
  if (o.beta) c.beta = *o.beta;
  if (o.window) c.window_days = *o.window;
  if (o.step) c.step_days = *o.step;
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

struct Dataset {
  std::vector<RawHourlyRecord> records;
  std::vector<ClockAdjustment> adjustments;
};

Dataset load(const Options& o) {
  if (o.input.empty()) throw Error(ErrorCode::config, "--input is required");
  auto fixed = fix_clock_changes(load_csv(o.input, o.schema));
  return {std::move(fixed.records), std::move(fixed.adjustments)};
}

std::vector<HourlyPanel> panels_for(const Dataset& data, const std::vector<int>& hours) {
  std::vector<HourlyPanel> out;
  for (int h : hours) out.push_back(slice_hour(data.records, h));
  return out;
}

Json adjustments_json(const std::vector<ClockAdjustment>& adj) {
  Json a = Json::array();
  for (const auto& x : adj) a.push_back({{"date", format_date(x.date)}, {"hour", x.hour}, {"kind", to_string(x.kind)}});
  return a;
}

Json input_json(const Options& o, const Dataset& data) {
  return Json{{"input", fs::path(o.input).filename().string()},
              {"records", data.records.size()},
              {"clock_adjustments", adjustments_json(data.adjustments)},
              {"clock_rule", "repeated hour keeps its first record; missing hour interpolated"}};
}

int single_hour(const AnalysisConfig& c) {
  if (c.hours.size() != 1) throw Error(ErrorCode::config, "exactly one hour required (--hour)");
  return c.hours.front();
}

void cmd_synth(const Options& o) {
  SynthConfig s;
  s.days = o.days;
  s.start = parse_date(o.start);
  s.preset = parse_preset(o.preset);
  s.seed = o.seed.value_or(1);
  s.clock_changes = o.clock_changes;
  s.break_fraction = o.break_fraction;
  const auto data = synthesize(s);
  const fs::path target = o.output.empty() ? out_dir(o) / "synth.csv" : fs::path(o.output);
  std::ostringstream csv;
  write_csv(csv, data.records);
  write_file(target, csv.str(), o.force);
  write_file(fs::path(target.string() + ".meta.json"), data.metadata.dump(2) + "\n", o.force);
  std::cout << target.string() << "\n";
}

void cmd_ingest(const Options& o) {
  const auto data = load(o);
  auto config = build_config(o);
  if (config.hours.empty()) config.hours = parse_hours("all");
  const fs::path dir = out_dir(o);
  Json panels = Json::array();
  for (const auto& p : panels_for(data, config.hours)) {
    std::ostringstream csv;
    write_panel(csv, p);
    const auto name = "panel_" + two_digits(p.hour()) + ".csv";
    write_file(dir / name, csv.str(), o.force);
    panels.push_back({{"hour", p.hour()}, {"file", name}, {"days", p.days()}, {"variables", p.variable_names()}});
  }
  Json meta = input_json(o, data);
  meta["panels"] = std::move(panels);
  write_file(dir / "ingest.json", meta.dump(2) + "\n", o.force);
}

void cmd_fit_marginals(const Options& o) {
  const auto config = build_config(o);
  const int hour = single_hour(config);
  const auto data = load(o);
  const auto panel = slice_hour(data.records, hour);
  const auto fit = fit_panel(panel, config.pit_mode);
  Json marg = Json::array();
  const auto names = panel.variable_names();
  for (std::size_t v = 0; v < fit.marginals.size(); ++v) {
    Json m = marginal_json(fit.marginals[v], o.series);
    m["variable"] = names[v];
    marg.push_back(std::move(m));
  }
  const Json doc{{"hour", hour}, {"first_date", format_date(panel.dates()[static_cast<std::size_t>(fit.first_row)])},
                 {"marginals", std::move(marg)}};
  write_file(out_dir(o) / ("marginals_" + two_digits(hour) + ".json"), doc.dump(2) + "\n", o.force);
}

void cmd_fit_vine(const Options& o) {
  const auto config = build_config(o);
  const int hour = single_hour(config);
  const auto data = load(o);
  const auto panel = slice_hour(data.records, hour);
  const auto fit = fit_panel(panel, config.pit_mode);
  const auto vine = select_and_fit(fit.pseudo_obs, config.candidates);
  const Json doc{{"hour", hour}, {"variables", panel.variable_names()}, {"families", config.families}, {"vine", vine}};
  write_file(out_dir(o) / ("vine_" + two_digits(hour) + ".json"), doc.dump(2) + "\n", o.force);
}

void cmd_tail(const Options& o) {
  const auto config = build_config(o);
  const int hour = single_hour(config);
  const auto data = load(o);
  const auto r = analyse_hour(slice_hour(data.records, hour), config);
  std::ostringstream all;
  write_tail_csv(all, {r});
  std::string text = all.str();
  if (!o.pattern.empty()) {
    std::istringstream in(text);
    std::string line, kept;
    std::getline(in, line);
    kept = line + "\n";
    while (std::getline(in, line))
      if (line.find(",scenario,") != std::string::npos) kept += line + "\n";
    text = kept;
  }
  write_file(out_dir(o) / ("tail_" + two_digits(hour) + ".csv"), text, o.force);
  std::cout << text;
}

void cmd_scenarios(const Options& o) {
  auto config = build_config(o);
  const auto data = load(o);
  if (config.hours.empty()) config.hours = parse_hours("all");
  const auto result = run_global(panels_for(data, config.hours), config);
  write_report(out_dir(o), config, &result, nullptr, o.force, input_json(o, data));
  for (const auto& f : result.failures)
    std::cerr << Json{{"code", to_string(f.code)}, {"message", f.message}, {"location", "hour " + std::to_string(f.hour)}}.dump()
              << "\n";
}

void cmd_roll(const Options& o) {
  auto config = build_config(o);
  const auto data = load(o);
  if (config.hours.empty()) config.hours = {8, 10, 12, 14, 16};
  const auto result = run_rolling(panels_for(data, config.hours), config);
  write_report(out_dir(o), config, nullptr, &result, o.force, input_json(o, data));
}

void cmd_simulate(const Options& o) {
  if (o.model.empty()) throw Error(ErrorCode::config, "--model is required");
  std::ifstream in(o.model);
  if (!in) throw Error(ErrorCode::io, "cannot open model file", o.model);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema, e.what(), o.model);
  }
  const auto model = (doc.contains("vine") ? doc.at("vine") : doc).get<VineModel>();
  if (o.n < 1) throw Error(ErrorCode::config, "--n must be positive");
  const MatrixXd u = simulate(model, o.n, o.seed.value_or(1));
  std::ostringstream csv;
  for (Index k = 0; k < u.cols(); ++k) csv << (k ? "," : "") << "u" << k + 1;
  csv << "\n";
  for (Index i = 0; i < u.rows(); ++i) {
    for (Index k = 0; k < u.cols(); ++k) csv << (k ? "," : "") << format_double(u(i, k));
    csv << "\n";
  }
  write_file(o.output.empty() ? out_dir(o) / "simulated.csv" : fs::path(o.output), csv.str(), o.force);
}

int report_error(const std::string& code, const std::string& message, const std::string& location, int status) {
  Json j{{"code", code}, {"message", message}};
  if (!location.empty()) j["location"] = location;
  std::cerr << j.dump() << "\n";
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vine copula and Kendall tail dependence analysis of hourly panels"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "key = value configuration file");
  app.add_option("--out", o.out_dir, "output directory (default $VINETAIL_OUTPUT_DIR or .)");
  app.add_option("--seed", o.seed, "seed for every stochastic step");
  app.add_option("--jobs", o.jobs, "parallel hour/window jobs")->check(CLI::NonNegativeNumber);
  app.add_flag("--force", o.force, "overwrite existing outputs");

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("--input", o.input, "hourly CSV")->required();
    sub->add_option("--date-col", o.schema.date);
    sub->add_option("--hour-col", o.schema.hour);
    sub->add_option("--price-col", o.schema.price);
    sub->add_option("--demand-col", o.schema.demand);
    sub->add_option("--wind-col", o.schema.wind);
    sub->add_option("--solar-col", o.schema.solar, "empty when the file has no solar column");
  };
  auto add_fit = [&](CLI::App* sub) {
    sub->add_option("--families", o.families, "candidate families, e.g. indep,gaussian,t,clayton,gumbel,frank");
    sub->add_option("--pit", o.pit, "parametric or rank");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic hourly dataset");
  synth->add_option("--days", o.days);
  synth->add_option("--start", o.start);
  synth->add_option("--preset", o.preset, "independence, gaussian or clayton");
  synth->add_flag("--clock-changes", o.clock_changes, "drop and repeat hour 2 on the changeover Sundays");
  synth->add_option("--break", o.break_fraction, "share of days after which the variables are independent");
  synth->add_option("--output", o.output, "CSV path (default <out>/synth.csv)");

  auto* ingest = app.add_subcommand("ingest", "validate a CSV and write per-hour panels");
  add_input(ingest);
  ingest->add_option("--hours", o.hours, "e.g. 0-23 or 8,12");

  auto* fit_m = app.add_subcommand("fit-marginals", "AR-GARCH fits for one hour");
  add_input(fit_m);
  fit_m->add_option("--hour", o.hour)->required()->check(CLI::Range(0, 23));
  fit_m->add_flag("--series", o.series, "include residual and pseudo-observation series");
  add_fit(fit_m);

  auto* fit_v = app.add_subcommand("fit-vine", "R-vine fit for one hour");
  add_input(fit_v);
  fit_v->add_option("--hour", o.hour)->required()->check(CLI::Range(0, 23));
  add_fit(fit_v);

  auto* tail = app.add_subcommand("tail", "tail coefficients for one hour");
  add_input(tail);
  tail->add_option("--hour", o.hour)->required()->check(CLI::Range(0, 23));
  tail->add_option("--alpha", o.alpha);
  tail->add_option("--beta", o.beta);
  tail->add_option("--pattern", o.pattern, "scenario such as HLL; only scenario rows are written");
  add_fit(tail);

  auto* scen = app.add_subcommand("scenarios", "per-hour analysis and report bundle");
  add_input(scen);
  scen->add_option("--hours", o.hours);
  scen->add_option("--alpha", o.alpha);
  scen->add_option("--beta", o.beta);
  add_fit(scen);

  auto* roll = app.add_subcommand("roll", "rolling-window dependence series");
  add_input(roll);
  roll->add_option("--hours", o.hours, "default 8,10,12,14,16");
  roll->add_option("--window", o.window, "window length in days");
  roll->add_option("--step", o.step, "days between windows");
  add_fit(roll);

  auto* sim = app.add_subcommand("simulate", "draw uniforms from a vine JSON");
  sim->add_option("--model", o.model, "vine JSON as written by fit-vine")->required();
  sim->add_option("--n", o.n);
  sim->add_option("--output", o.output, "CSV path (default <out>/simulated.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), {}, 2);
  }

  try {
    const std::string verb = app.get_subcommands().front()->get_name();
    if (verb == "synth") cmd_synth(o);
    else if (verb == "ingest") cmd_ingest(o);
    else if (verb == "fit-marginals") cmd_fit_marginals(o);
    else if (verb == "fit-vine") cmd_fit_vine(o);
    else if (verb == "tail") cmd_tail(o);
    else if (verb == "scenarios") cmd_scenarios(o);
    else if (verb == "roll") cmd_roll(o);
    else cmd_simulate(o);
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.code())), e.what(), e.location(), e.code() == ErrorCode::config ? 2 : 1);
  } catch (const Json::exception& e) {
    return report_error("schema", e.what(), {}, 1);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), {}, 1);
  }
  return 0;
}
