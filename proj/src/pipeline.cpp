#include "vinetail/pipeline.hpp"

#include "vinetail/error.hpp"
#include "vinetail/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace vinetail {

namespace {

constexpr std::uint64_t kSpearmanStream = 1;
constexpr std::uint64_t kTailStream = 2;
constexpr std::uint64_t kWindowStream = 3;
constexpr std::uint64_t kFullSampleStream = 4;
constexpr std::uint64_t kSynthStream = 11;
constexpr std::uint64_t kSynthBreakStream = 12;
constexpr Index kSynthBurnIn = 200;

template <typename Job>
void parallel_for(int jobs, std::size_t n, Job job) {
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    throw Error(ErrorCode::config, "cannot parse '" + std::string(text) + "'", key);
  return v;
}

std::vector<double> parse_grid(const std::string& key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number<double>(key, item));
  return out;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

std::string pair_label(const std::vector<std::string>& names, int i, int j) {
  return names[static_cast<std::size_t>(i)] + "-" + names[static_cast<std::size_t>(j)];
}

std::vector<double> usable_grid(const std::vector<double>& grid, Index n) {
  std::vector<double> out;
  for (double t : grid)
    if (static_cast<double>(n) * t >= 20.0) out.push_back(t);
  return out;
}

void require_file_free(const std::filesystem::path& p, bool force) {
  if (!force && std::filesystem::exists(p))
    throw Error(ErrorCode::exists, "output file exists; pass --force to overwrite", p.string());
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write file", p.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed", p.string());
}

std::string hour_file(int hour) {
  std::string s = "hour_";
  if (hour < 10) s += '0';
  return s + std::to_string(hour) + ".json";
}

}  // namespace

// ---- configuration -----------------------------------------------------------

void AnalysisConfig::validate() const {
  std::set<int> seen;
  for (int h : hours) {
    if (h < 0 || h > 23) throw Error(ErrorCode::config, "hour out of range", std::to_string(h));
    if (!seen.insert(h).second) throw Error(ErrorCode::config, "hour listed twice", std::to_string(h));
  }
  if (window_days < 1) throw Error(ErrorCode::config, "window must be positive", "window");
  if (step_days < 1) throw Error(ErrorCode::config, "step must be at least 1", "step");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::config, "alpha must lie in (0, 0.5)", "alpha");
  if (!(beta > 0.0 && beta < 0.5)) throw Error(ErrorCode::config, "beta must lie in (0, 0.5)", "beta");
  for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
    if (!(lambda_grid[k] > 0.0 && lambda_grid[k] <= 0.1) || (k > 0 && !(lambda_grid[k] < lambda_grid[k - 1])))
      throw Error(ErrorCode::config, "lambda grid must be decreasing inside (0, 0.1]", "lambda_grid");
  }
  for (double t : tdc_grid)
    if (!(t > 0.0 && t <= 0.1)) throw Error(ErrorCode::config, "tdc grid values must lie in (0, 0.1]", "tdc_grid");
  if (n_mc < 10000) throw Error(ErrorCode::config, "n_mc must be at least 10000", "n_mc");
  if (n_mc_rolling < 10000) throw Error(ErrorCode::config, "n_mc_rolling must be at least 10000", "n_mc_rolling");
  if (n_mc_tail < 1000) throw Error(ErrorCode::config, "n_mc_tail must be at least 1000", "n_mc_tail");
  if (candidates.empty()) throw Error(ErrorCode::config, "no candidate families", "families");
  if (jobs < 0) throw Error(ErrorCode::config, "jobs must be non-negative", "jobs");
  for (const auto& s : scenarios) parse_scenario(s, 4, alpha, beta);
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file", path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::config, "expected key = value", path.string() + ":" + std::to_string(number));
    out[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

std::vector<int> parse_hours(std::string_view text) {
  const std::string t = trim(text);
  if (t == "all") {
    std::vector<int> all(24);
    for (int h = 0; h < 24; ++h) all[static_cast<std::size_t>(h)] = h;
    return all;
  }
  std::vector<int> out;
  for (const auto& item : split(t, ',')) {
    if (const auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
      const int lo = parse_number<int>("hours", trim(std::string_view(item).substr(0, dash)));
      const int hi = parse_number<int>("hours", trim(std::string_view(item).substr(dash + 1)));
      if (hi < lo) throw Error(ErrorCode::config, "empty hour range '" + item + "'", "hours");
      for (int h = lo; h <= hi; ++h) out.push_back(h);
    } else {
      out.push_back(parse_number<int>("hours", item));
    }
  }
  return out;
}

AnalysisConfig apply_config(AnalysisConfig c, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "hours") c.hours = parse_hours(value);
    else if (key == "window") c.window_days = parse_number<Index>(key, value);
    else if (key == "step") c.step_days = parse_number<Index>(key, value);
    else if (key == "alpha") c.alpha = parse_number<double>(key, value);
    else if (key == "beta") c.beta = parse_number<double>(key, value);
    else if (key == "lambda_grid") c.lambda_grid = parse_grid(key, value);
    else if (key == "tdc_grid") c.tdc_grid = parse_grid(key, value);
    else if (key == "n_mc") c.n_mc = parse_number<Index>(key, value);
    else if (key == "n_mc_tail") c.n_mc_tail = parse_number<Index>(key, value);
    else if (key == "n_mc_rolling") c.n_mc_rolling = parse_number<Index>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "families") {
      c.candidates = parse_candidates(value);
      c.families = value;
    } else if (key == "pit") c.pit_mode = parse_pit_mode(value);
    else if (key == "scenarios") c.scenarios = split(value, ',');
    else if (key == "jobs") c.jobs = parse_number<int>(key, value);
    else throw Error(ErrorCode::config, "unknown configuration key", key);
  }
  return c;
}

Json config_json(const AnalysisConfig& c) {
  return Json{{"hours", c.hours},
              {"window_days", c.window_days},
              {"step_days", c.step_days},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"lambda_grid", c.lambda_grid},
              {"tdc_grid", c.tdc_grid},
              {"n_mc", c.n_mc},
              {"n_mc_tail", c.n_mc_tail},
              {"n_mc_rolling", c.n_mc_rolling},
              {"seed", c.seed},
              {"families", c.families},
              {"pit", to_string(c.pit_mode)},
              {"scenarios", c.scenarios}};
}

std::vector<ScenarioPattern> scenarios_for(int dim, const std::vector<std::string>& labels, double alpha,
                                           double beta) {
  std::vector<ScenarioPattern> out;
  std::set<std::string> seen;
  for (const auto& label : labels) {
    std::string_view letters = label;
    std::string suffix;
    if (const auto slash = label.find('/'); slash != std::string::npos) {
      letters = std::string_view(label).substr(0, slash);
      suffix = label.substr(slash);
    }
    std::string cut(letters.substr(0, std::min<std::size_t>(letters.size(), static_cast<std::size_t>(dim - 1))));
    while (!cut.empty() && cut.back() == '.') cut.pop_back();
    if (cut.empty()) continue;
    auto p = parse_scenario(cut + suffix, dim, alpha, beta);
    if (seen.insert(p.label()).second) out.push_back(std::move(p));
  }
  return out;
}

// ---- per-hour analysis ---------------------------------------------------------

PanelFit fit_panel(const HourlyPanel& panel, PitMode pit_mode) {
  const MatrixXd dummies = build_dummies(panel.dates()).matrix;
  PanelFit out;
  int max_lag = 0;
  FitOptions opts;
  opts.pit_mode = pit_mode;
  for (Index v = 0; v < panel.variables(); ++v) {
    const auto spec = default_spec(static_cast<Variable>(v));
    try {
      out.marginals.push_back(fit_ar_garch(panel.values().col(v), dummies, spec, opts));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(variable_name(static_cast<Variable>(v))) + ": " + e.what(), e.location());
    }
    max_lag = std::max(max_lag, spec.max_lag());
  }
  const Index n = panel.days() - max_lag;
  out.first_row = max_lag;
  out.pseudo_obs.resize(n, panel.variables());
  for (Index v = 0; v < panel.variables(); ++v) {
    const auto& u = out.marginals[static_cast<std::size_t>(v)].pseudo_obs;
    out.pseudo_obs.col(v) = u.tail(n);
  }
  return out;
}

HourlyAnalysisResult analyse_hour(const HourlyPanel& panel, const AnalysisConfig& config) {
  HourlyAnalysisResult r;
  r.hour = panel.hour();
  r.variables = panel.variable_names();
  auto fit = fit_panel(panel, config.pit_mode);
  r.marginals = std::move(fit.marginals);
  for (std::size_t v = 0; v < r.marginals.size(); ++v)
    for (const auto& w : r.marginals[v].warnings) r.warnings.push_back(r.variables[v] + ": " + w);

  r.vine = select_and_fit(fit.pseudo_obs, config.candidates);
  const Index d = r.vine.dim();
  r.empirical_spearman = MatrixXd::Identity(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j)
      r.empirical_spearman(i, j) = r.empirical_spearman(j, i) = spearman(fit.pseudo_obs.col(i), fit.pseudo_obs.col(j));

  const auto h = static_cast<std::uint64_t>(r.hour);
  r.seeds["spearman"] = derive_seed(config.seed, {h, kSpearmanStream});
  r.seeds["tail"] = derive_seed(config.seed, {h, kTailStream});
  r.spearman = induced_spearman_matrix(r.vine, config.n_mc, r.seeds["spearman"]);

  const MatrixXd sample = simulate(r.vine, config.n_mc_tail, r.seeds["tail"]);
  const auto grid = usable_grid(config.tdc_grid, config.n_mc_tail);
  if (grid.size() < config.tdc_grid.size())
    r.warnings.push_back("tail grid points with fewer than 20 expected draws dropped");
  if (!grid.empty()) {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) r.tdc.push_back({i, j, pair_tail(sample, i, j, grid)});
  }

  const MatrixXd x = sample.rightCols(d - 1);
  const VectorXd y = sample.col(0);
  for (TailSide side : {TailSide::lower, TailSide::upper}) {
    try {
      auto est = lambda_kendall(x, y, side, config.lambda_grid);
      (side == TailSide::lower ? r.lambda_lower : r.lambda_upper) = std::move(est);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::resolution) throw;
      r.warnings.push_back(std::string(to_string(side)) + " lambda: " + e.what());
    }
  }

  for (const auto& p : scenarios_for(static_cast<int>(d), config.scenarios, config.alpha, config.beta)) {
    try {
      r.scenarios.push_back({p.label(), scenario_tail_coefficient(sample, p)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::resolution) throw;
      r.warnings.push_back("scenario " + p.label() + ": " + e.what());
    }
  }
  return r;
}

namespace {

const HourlyPanel& panel_for(const std::vector<HourlyPanel>& panels, int hour) {
  for (const auto& p : panels)
    if (p.hour() == hour) return p;
  throw Error(ErrorCode::config, "no panel for requested hour", std::to_string(hour));
}

JobFailure failure_of(int hour, Index window, std::exception_ptr ep) {
  JobFailure f{hour, window, ErrorCode::numerical, {}};
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    f.code = e.code();
    f.message = e.what();
  } catch (const std::exception& e) {
    f.message = e.what();
  }
  return f;
}

}  // namespace

GlobalResult run_global(const std::vector<HourlyPanel>& panels, const AnalysisConfig& config) {
  config.validate();
  std::vector<const HourlyPanel*> jobs;
  for (int h : config.hours) jobs.push_back(&panel_for(panels, h));
  std::vector<std::optional<HourlyAnalysisResult>> slots(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  parallel_for(config.jobs, jobs.size(), [&](std::size_t k) {
    try {
      slots[k] = analyse_hour(*jobs[k], config);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  });
  GlobalResult out;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (slots[k]) out.hours.push_back(std::move(*slots[k]));
    else out.failures.push_back(failure_of(jobs[k]->hour(), -1, errors[k]));
  }
  return out;
}

// ---- rolling windows -----------------------------------------------------------

Index window_count(Index days, Index window, Index step) {
  if (window < 1 || step < 1) throw Error(ErrorCode::domain, "window and step must be positive");
  if (days < window) return 0;
  return (days - window) / step + 1;
}

std::vector<RollingResult> run_rolling(const std::vector<HourlyPanel>& panels, const AnalysisConfig& config) {
  config.validate();
  struct Job {
    std::size_t result;
    Index window;  // -1: full sample
  };
  std::vector<RollingResult> results;
  std::vector<const HourlyPanel*> hour_panels;
  std::vector<Job> jobs;
  for (int h : config.hours) {
    const auto& panel = panel_for(panels, h);
    if (panel.days() < config.window_days + config.step_days)
      throw Error(ErrorCode::config, "hour " + std::to_string(h) + " has " + std::to_string(panel.days()) +
                                         " days, fewer than window + step");
    RollingResult r;
    r.hour = h;
    const auto names = panel.variable_names();
    const int d = static_cast<int>(panel.variables());
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        r.pairs.emplace_back(i, j);
        r.pair_labels.push_back(pair_label(names, i, j));
      }
    const Index n = window_count(panel.days(), config.window_days, config.step_days);
    const auto pairs = static_cast<Index>(r.pairs.size());
    r.series = MatrixXd::Constant(n, pairs, NAN);
    r.std_error = MatrixXd::Constant(n, pairs, NAN);
    r.skipped.assign(static_cast<std::size_t>(n), false);
    r.skip_reason.assign(static_cast<std::size_t>(n), {});
    for (Index w = 0; w < n; ++w) r.window_end.push_back(panel.dates()[static_cast<std::size_t>(w * config.step_days + config.window_days - 1)]);
    jobs.push_back({results.size(), -1});
    for (Index w = 0; w < n; ++w) jobs.push_back({results.size(), w});
    results.push_back(std::move(r));
    hour_panels.push_back(&panel);
  }

  struct Estimate {
    VectorXd value;
    VectorXd error;
  };
  auto estimate = [&](const HourlyPanel& panel, std::uint64_t seed, const RollingResult& r) {
    const auto fit = fit_panel(panel, config.pit_mode);
    const auto model = select_and_fit(fit.pseudo_obs, config.candidates);
    const MatrixXd rho = induced_spearman_matrix(model, config.n_mc_rolling, seed);
    Estimate e{VectorXd(static_cast<Index>(r.pairs.size())), VectorXd(static_cast<Index>(r.pairs.size()))};
    for (std::size_t k = 0; k < r.pairs.size(); ++k) {
      const double v = rho(r.pairs[k].first, r.pairs[k].second);
      const double mc = spearman_stderr(v, static_cast<double>(config.n_mc_rolling));
      const double sampling = spearman_stderr(v, static_cast<double>(fit.pseudo_obs.rows()));
      e.value[static_cast<Index>(k)] = v;
      e.error[static_cast<Index>(k)] = std::hypot(mc, sampling);
    }
    return e;
  };

  std::vector<std::exception_ptr> full_errors(results.size());
  parallel_for(config.jobs, jobs.size(), [&](std::size_t k) {
    const Job job = jobs[k];
    auto& r = results[job.result];
    const auto& panel = *hour_panels[job.result];
    const auto h = static_cast<std::uint64_t>(r.hour);
    if (job.window < 0) {
      try {
        auto e = estimate(panel, derive_seed(config.seed, {h, kFullSampleStream}), r);
        r.full_sample = std::move(e.value);
        r.full_sample_error = std::move(e.error);
      } catch (...) {
        full_errors[job.result] = std::current_exception();
      }
      return;
    }
    const auto w = static_cast<std::size_t>(job.window);
    try {
      const auto e = estimate(panel.window(job.window * config.step_days, config.window_days),
                              derive_seed(config.seed, {h, kWindowStream, static_cast<std::uint64_t>(job.window)}), r);
      r.series.row(job.window) = e.value.transpose();
      r.std_error.row(job.window) = e.error.transpose();
    } catch (const std::exception& ex) {
      r.skipped[w] = true;
      r.skip_reason[w] = ex.what();
    }
  });
  for (auto& ep : full_errors)
    if (ep) std::rethrow_exception(ep);
  return results;
}

// ---- reports ---------------------------------------------------------------------

Json hour_json(const HourlyAnalysisResult& r) {
  Json tdc = Json::array();
  for (const auto& row : r.tdc)
    tdc.push_back({{"pair", {row.i, row.j}}, {"label", pair_label(r.variables, row.i, row.j)}, {"tail", row.tail}});
  Json scen = Json::array();
  for (const auto& s : r.scenarios) scen.push_back({{"label", s.label}, {"result", s.result}});
  Json marg = Json::array();
  for (std::size_t v = 0; v < r.marginals.size(); ++v) {
    Json m = marginal_json(r.marginals[v]);
    m["variable"] = r.variables[v];
    marg.push_back(std::move(m));
  }
  Json lambda = Json::object();
  lambda["lower"] = r.lambda_lower ? Json(*r.lambda_lower) : Json(nullptr);
  lambda["upper"] = r.lambda_upper ? Json(*r.lambda_upper) : Json(nullptr);
  return Json{{"hour", r.hour},
              {"variables", r.variables},
              {"marginals", std::move(marg)},
              {"vine", r.vine},
              {"spearman", {{"induced", matrix_json(r.spearman)}, {"empirical", matrix_json(r.empirical_spearman)}}},
              {"tdc", std::move(tdc)},
              {"lambda_kendall", std::move(lambda)},
              {"scenarios", std::move(scen)},
              {"seeds", r.seeds},
              {"warnings", r.warnings}};
}

void write_tail_csv(std::ostream& out, const std::vector<HourlyAnalysisResult>& hours) {
  out << "hour,measure,side,pattern,alpha,beta,value,ratio,stderr,reliable\n";
  auto row = [&](int hour, std::string_view measure, std::string_view side, const std::string& pattern, double a,
                 double b, double value, double ratio, double se, std::string_view reliable) {
    out << hour << ',' << measure << ',' << side << ',' << pattern << ',' << csv_number(a) << ',' << csv_number(b)
        << ',' << csv_number(value) << ',' << csv_number(ratio) << ',' << csv_number(se) << ',' << reliable << '\n';
  };
  for (const auto& r : hours) {
    const Index d = r.spearman.rows();
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        row(r.hour, "spearman", "", pair_label(r.variables, i, j), NAN, NAN, r.spearman(i, j), NAN, NAN, "");
    for (const auto& t : r.tdc) {
      const auto label = pair_label(r.variables, t.i, t.j);
      for (const auto& p : t.tail.points) {
        row(r.hour, "tdc", "lower", label, p.t, p.t, p.lower, p.lower / p.t, p.lower_stderr, "true");
        row(r.hour, "tdc", "upper", label, p.t, p.t, p.upper, p.upper / p.t, p.upper_stderr, "true");
      }
      row(r.hour, "tdc_limit", "lower", label, 0.0, 0.0, t.tail.lower_limit, NAN, NAN, "");
      row(r.hour, "tdc_limit", "upper", label, 0.0, 0.0, t.tail.upper_limit, NAN, NAN, "");
    }
    std::string given = r.variables[0] + "|";
    for (std::size_t v = 1; v < r.variables.size(); ++v) given += (v > 1 ? ";" : "") + r.variables[v];
    for (const auto* est : {&r.lambda_lower, &r.lambda_upper}) {
      if (!*est) continue;
      const std::string_view side = est == &r.lambda_lower ? "lower" : "upper";
      for (const auto& q : (*est)->sequence)
        row(r.hour, "lambda_kendall", side, given, q.alpha, q.beta, q.value, q.ratio_vs_independence, q.std_error,
            q.reliable ? "true" : "false");
      row(r.hour, "lambda_kendall_limit", side, given, 0.0, 0.0, (*est)->intercept, NAN, NAN, "");
    }
    for (const auto& s : r.scenarios)
      row(r.hour, "scenario", "upper", s.label, s.result.alpha, s.result.beta, s.result.value,
          s.result.ratio_vs_independence, s.result.std_error, s.result.reliable ? "true" : "false");
  }
}

void write_rolling_csv(std::ostream& out, const std::vector<RollingResult>& rolling) {
  out << "hour,pair,window_end,value,stderr,skipped,full_sample\n";
  for (const auto& r : rolling)
    for (std::size_t k = 0; k < r.pairs.size(); ++k)
      for (Index w = 0; w < r.series.rows(); ++w)
        out << r.hour << ',' << r.pair_labels[k] << ',' << format_date(r.window_end[static_cast<std::size_t>(w)])
            << ',' << csv_number(r.series(w, static_cast<Index>(k))) << ','
            << csv_number(r.std_error(w, static_cast<Index>(k))) << ','
            << (r.skipped[static_cast<std::size_t>(w)] ? "true" : "false") << ','
            << csv_number(r.full_sample[static_cast<Index>(k)]) << '\n';
}

std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const AnalysisConfig& config,
                                                const GlobalResult* global, const std::vector<RollingResult>* rolling,
                                                bool force, const Json& extra) {
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  Json run{{"version", kVersion}, {"config", config_json(config)}, {"extra", extra}};
  Json notes = Json::array();
  notes.push_back("scenario and upper Kendall values are P(Y >= y_(1-beta) | W >= t_U); under independence they "
                  "equal beta, so ratio_vs_independence = value / beta and ratio_remark = value / (1 - beta)");
  notes.push_back("tdc values are C(t, t) / t and P(U > 1 - t, V > 1 - t) / t on the vine sample; limits are "
                  "least-squares intercepts over the grid");
  run["notes"] = std::move(notes);

  if (global) {
    Json hours = Json::array();
    Json failures = Json::array();
    for (const auto& r : global->hours) {
      files.emplace_back(dir / hour_file(r.hour), hour_json(r).dump(2) + "\n");
      hours.push_back({{"hour", r.hour}, {"file", hour_file(r.hour)}, {"seeds", r.seeds}, {"warnings", r.warnings}});
    }
    for (const auto& f : global->failures)
      failures.push_back({{"hour", f.hour}, {"code", to_string(f.code)}, {"message", f.message}});
    std::ostringstream tail;
    write_tail_csv(tail, global->hours);
    files.emplace_back(dir / "tail.csv", tail.str());
    run["hours"] = std::move(hours);
    run["failures"] = std::move(failures);
  }
  if (rolling) {
    std::ostringstream roll;
    write_rolling_csv(roll, *rolling);
    files.emplace_back(dir / "rolling.csv", roll.str());
    Json skipped = Json::array();
    for (const auto& r : *rolling)
      for (std::size_t w = 0; w < r.skipped.size(); ++w)
        if (r.skipped[w])
          skipped.push_back({{"hour", r.hour}, {"window_end", format_date(r.window_end[w])}, {"reason", r.skip_reason[w]}});
    run["skipped_windows"] = std::move(skipped);
  }
  files.emplace_back(dir / "run.json", run.dump(2) + "\n");

  for (const auto& [p, _] : files) require_file_free(p, force);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [p, text] : files) {
    write_text(p, text);
    written.push_back(p);
  }
  return written;
}

// ---- synthetic data ---------------------------------------------------------------

std::string_view to_string(SynthPreset p) {
  switch (p) {
    case SynthPreset::independence: return "independence";
    case SynthPreset::gaussian: return "gaussian";
    case SynthPreset::clayton: return "clayton";
  }
  return "?";
}

SynthPreset parse_preset(std::string_view name) {
  if (name == "independence") return SynthPreset::independence;
  if (name == "gaussian") return SynthPreset::gaussian;
  if (name == "clayton") return SynthPreset::clayton;
  throw Error(ErrorCode::config, "unknown generator preset '" + std::string(name) + "'");
}

VineModel generator_vine(SynthPreset preset, int dim) {
  if (dim < 2 || dim > 4) throw Error(ErrorCode::config, "generator dimension must be 2..4");
  std::vector<int> order(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) order[static_cast<std::size_t>(k)] = k;
  auto s = VineStructure::c_vine(order);
  switch (preset) {
    case SynthPreset::gaussian: {
      Eigen::Matrix4d r;
      r << 1.0, 0.6, -0.4, -0.3,  //
          0.6, 1.0, 0.1, 0.2,      //
          -0.4, 0.1, 1.0, -0.1,    //
          -0.3, 0.2, -0.1, 1.0;
      return gaussian_vine(std::move(s), r.topLeftCorner(dim, dim));
    }
    case SynthPreset::clayton: {
      std::vector<std::vector<BivariateCopula>> cops(static_cast<std::size_t>(dim - 1));
      const BivariateCopula first[] = {BivariateCopula::clayton(2.0), BivariateCopula::gumbel(1.5, 270),
                                       BivariateCopula::frank(-2.0)};
      for (int t = 0; t < dim - 1; ++t)
        for (std::size_t k = 0; k < s.trees()[static_cast<std::size_t>(t)].size(); ++k)
          cops[static_cast<std::size_t>(t)].push_back(t == 0 ? first[k] : BivariateCopula::independence());
      return make_vine(std::move(s), cops);
    }
    case SynthPreset::independence: break;
  }
  std::vector<std::vector<BivariateCopula>> cops;
  for (const auto& tree : s.trees()) cops.emplace_back(tree.size(), BivariateCopula::independence());
  return make_vine(std::move(s), cops);
}

ArGarchParams generator_params(Variable v) {
  ArGarchParams p;
  p.psi = VectorXd::Zero(CalendarDummies::kColumns);
  auto seasonal = [&](double level, double amplitude, double saturday, double sunday) {
    for (int m = 0; m < 12; ++m) p.psi[m] = level * (1.0 + amplitude * std::cos(2.0 * std::numbers::pi * m / 12.0));
    p.psi[CalendarDummies::kSaturday] = saturday;
    p.psi[CalendarDummies::kSunday] = sunday;
  };
  switch (v) {
    case Variable::price:
      p.phi = Eigen::Vector3d(0.5, 0.1, 0.2);
      seasonal(8.0, 0.1, -1.5, -3.0);
      p.omega = 4.0;
      p.alpha = 0.1;
      p.beta = 0.8;
      break;
    case Variable::demand:
      p.phi = Eigen::VectorXd::Constant(1, 0.7);
      seasonal(15000.0, 0.08, -1500.0, -2500.0);
      p.omega = 2e5;
      p.alpha = 0.05;
      p.beta = 0.9;
      break;
    case Variable::wind:
      p.phi = Eigen::VectorXd::Constant(1, 0.8);
      seasonal(2000.0, 0.2, 0.0, 0.0);
      p.omega = 1e5;
      p.alpha = 0.1;
      p.beta = 0.85;
      break;
    case Variable::solar:
      p.phi = Eigen::VectorXd::Constant(1, 0.6);
      seasonal(2000.0, -0.5, 0.0, 0.0);
      p.omega = 5e4;
      p.alpha = 0.1;
      p.beta = 0.8;
      break;
  }
  return p;
}

Json generator_json(const SynthConfig& config) {
  Json marg = Json::object();
  for (int v = 0; v < 4; ++v) {
    const auto var = static_cast<Variable>(v);
    marg[std::string(variable_name(var))] = {{"spec", default_spec(var)}, {"params", generator_params(var)}};
  }
  return Json{{"preset", to_string(config.preset)},
              {"seed", config.seed},
              {"days", config.days},
              {"start", format_date(config.start)},
              {"clock_changes", config.clock_changes},
              {"break_fraction", config.break_fraction},
              {"burn_in", kSynthBurnIn},
              {"marginals", std::move(marg)},
              {"vine_trivariate", generator_vine(config.preset, 3)},
              {"vine_quadrivariate", generator_vine(config.preset, 4)}};
}

SynthData synthesize(const SynthConfig& config) {
  if (config.days < 60) throw Error(ErrorCode::config, "synthetic data needs at least 60 days", "days");
  if (!(config.break_fraction >= 0.0 && config.break_fraction < 1.0))
    throw Error(ErrorCode::config, "break fraction must lie in [0, 1)", "break_fraction");
  std::vector<Date> dates;
  for (Index t = 0; t < config.days; ++t) dates.push_back(add_days(config.start, static_cast<int>(t)));
  const MatrixXd dummies = build_dummies(dates).matrix;
  const Index n = kSynthBurnIn + config.days;

  // values[hour] is days x 4, solar zero outside solar hours
  std::vector<MatrixXd> values(24);
  for (int h = 0; h < 24; ++h) {
    const int dim = variable_count(h);
    const auto hs = static_cast<std::uint64_t>(h);
    MatrixXd u = simulate(generator_vine(config.preset, dim), n, derive_seed(config.seed, {hs, kSynthStream}));
    if (config.break_fraction > 0.0) {
      const Index from = kSynthBurnIn + static_cast<Index>(std::floor(config.break_fraction * static_cast<double>(config.days)));
      const MatrixXd iid = simulate(generator_vine(SynthPreset::independence, dim), n,
                                    derive_seed(config.seed, {hs, kSynthBreakStream}));
      u.bottomRows(n - from) = iid.bottomRows(n - from);
    }
    values[static_cast<std::size_t>(h)] = MatrixXd::Zero(config.days, 4);
    for (int v = 0; v < dim; ++v) {
      const auto var = static_cast<Variable>(v);
      VectorXd eta(n);
      for (Index t = 0; t < n; ++t) eta[t] = normal_quantile(u(t, v));
      values[static_cast<std::size_t>(h)].col(v) =
          ar_garch_path(generator_params(var), default_spec(var), dummies, eta, kSynthBurnIn);
    }
  }

  auto last_sunday = [](std::chrono::year y, std::chrono::month m) {
    return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::year_month_weekday_last{
        y, m, std::chrono::weekday_last{std::chrono::Sunday}}}};
  };

  SynthData out;
  for (Index t = 0; t < config.days; ++t) {
    const Date& d = dates[static_cast<std::size_t>(t)];
    const bool spring = config.clock_changes && d == last_sunday(d.year(), std::chrono::March);
    const bool autumn = config.clock_changes && d == last_sunday(d.year(), std::chrono::October);
    for (int h = 0; h < 24; ++h) {
      if (spring && h == 2) continue;
      const auto& m = values[static_cast<std::size_t>(h)];
      RawHourlyRecord r{d, h, m(t, 0), m(t, 1), m(t, 2), m(t, 3), 0};
      out.records.push_back(r);
      if (autumn && h == 2) {
        r.price += 1.0;
        out.records.push_back(r);
      }
    }
  }
  out.metadata = generator_json(config);
  return out;
}

}  // namespace vinetail
