#include <doctest.h>

#include "vinetail/error.hpp"
#include "vinetail/pipeline.hpp"
#include "vinetail/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace vinetail;

namespace {

std::vector<HourlyPanel> panels_of(const std::vector<RawHourlyRecord>& records, const std::vector<int>& hours) {
  const auto fixed = fix_clock_changes(records).records;
  std::vector<HourlyPanel> out;
  for (int h : hours) out.push_back(slice_hour(fixed, h));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

AnalysisConfig small_config(std::vector<int> hours) {
  AnalysisConfig c;
  c.hours = std::move(hours);
  c.n_mc = 10000;
  c.n_mc_tail = 20000;
  c.n_mc_rolling = 10000;
  c.tdc_grid = {0.05, 0.02, 0.01};
  c.lambda_grid = {0.1, 0.05, 0.02};
  c.jobs = 2;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("vinetail_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("copula and vine JSON round trips are bit-exact") {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const double rho = 2.0 * rng.uniform() - 1.0;
    const double theta = 1.0 + 10.0 * rng.uniform();
    for (const auto& c : {BivariateCopula::gaussian(rho), BivariateCopula::student_t(rho, 2.5 + 20 * rng.uniform()),
                          BivariateCopula::clayton(theta, 90), BivariateCopula::gumbel(theta, 180),
                          BivariateCopula::frank(-theta), BivariateCopula::independence()}) {
      const Json j = c;
      const auto back = Json::parse(j.dump()).get<BivariateCopula>();
      CHECK(back == c);
    }
  }
  const auto model = generator_vine(SynthPreset::clayton, 4);
  const Json j = model;
  const auto back = Json::parse(j.dump()).get<VineModel>();
  CHECK(back.structure == model.structure);
  for (std::size_t t = 0; t < model.edges.size(); ++t)
    for (std::size_t k = 0; k < model.edges[t].size(); ++k) CHECK(back.edges[t][k].copula == model.edges[t][k].copula);
  CHECK(Json(back).dump() == j.dump());

  Json broken = j;
  broken["trees"][1][0]["given"] = std::vector<int>{3};
  CHECK_THROWS_AS(broken.get<VineModel>(), Error);

  const auto params = generator_params(Variable::price);
  const auto pb = Json::parse(Json(params).dump()).get<ArGarchParams>();
  CHECK(pb.phi == params.phi);
  CHECK(pb.psi == params.psi);
  CHECK(pb.omega == params.omega);
}

TEST_CASE("configuration parsing") {
  CHECK(parse_hours("8-10,12") == std::vector<int>{8, 9, 10, 12});
  CHECK(parse_hours("all").size() == 24);
  CHECK_THROWS_AS(parse_hours("8-x"), Error);

  const auto c = apply_config({}, {{"hours", "3,12"}, {"window", "365"}, {"step", "7"}, {"alpha", "0.1"},
                                   {"families", "gaussian,clayton"}, {"pit", "rank"}, {"scenarios", "HL/L, .H"}});
  CHECK(c.hours == std::vector<int>{3, 12});
  CHECK(c.window_days == 365);
  CHECK(c.step_days == 7);
  CHECK(c.alpha == 0.1);
  CHECK(c.candidates.size() == 5);
  CHECK(c.pit_mode == PitMode::rank);
  CHECK(c.scenarios == std::vector<std::string>{"HL/L", ".H"});
  c.validate();
  CHECK_THROWS_AS(apply_config({}, {{"windw", "3"}}), Error);
  CHECK_THROWS_AS(apply_config({}, {{"window", "3.5"}}), Error);
  auto bad = c;
  bad.step_days = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.hours = {3, 3};
  CHECK_THROWS_AS(bad.validate(), Error);

  const auto path = scratch("config.txt");
  {
    std::ofstream out(path);
    out << "# comment\nseed = 42\n\nbeta=0.1 # trailing\n";
  }
  const auto kv = read_config_file(path);
  CHECK(kv.at("seed") == "42");
  CHECK(kv.at("beta") == "0.1");
  std::filesystem::remove(path);
}

TEST_CASE("scenario sets per dimension") {
  const std::vector<std::string> five{"HLL", "HHL", "HLH", "LHH", "LHL"};
  std::vector<std::string> labels;
  for (const auto& p : scenarios_for(4, five, 0.05, 0.05)) labels.push_back(p.label());
  CHECK(labels == five);
  labels.clear();
  for (const auto& p : scenarios_for(3, five, 0.05, 0.05)) labels.push_back(p.label());
  CHECK(labels == std::vector<std::string>{"HL", "HH", "LH"});
}

TEST_CASE("window count formula") {
  for (Index t : {100, 731, 732, 1000, 2557})
    for (Index w : {50, 365, 730})
      for (Index s : {1, 7, 30}) {
        Index brute = 0;
        for (Index first = 0; first + w <= t; first += s) ++brute;
        CHECK(window_count(t, w, s) == brute);
      }
}

TEST_CASE("synthetic data") {
  SynthConfig cfg;
  cfg.days = 400;
  cfg.seed = 9;
  cfg.clock_changes = true;
  const auto a = synthesize(cfg);
  const auto b = synthesize(cfg);
  std::ostringstream sa, sb;
  write_csv(sa, a.records);
  write_csv(sb, b.records);
  CHECK(sa.str() == sb.str());
  CHECK(a.metadata.dump() == b.metadata.dump());
  CHECK(a.records.size() == static_cast<std::size_t>(400 * 24));  // one hour dropped, one repeated

  std::istringstream in(sa.str());
  const auto fixed = fix_clock_changes(read_csv(in));
  CHECK(fixed.records.size() == static_cast<std::size_t>(400 * 24));
  CHECK(fixed.adjustments.size() == 2);
  CHECK(slice_hour(fixed.records, 12).variables() == 4);
  CHECK(slice_hour(fixed.records, 3).variables() == 3);

  cfg.seed = 10;
  std::ostringstream sc;
  write_csv(sc, synthesize(cfg).records);
  CHECK(sc.str() != sa.str());
  cfg.days = 10;
  CHECK_THROWS_AS(synthesize(cfg), Error);
}

TEST_CASE("global analysis recovers the generator Spearman matrix") {
  SynthConfig cfg;
  cfg.days = 3000;
  cfg.seed = 3;
  const auto panels = panels_of(synthesize(cfg).records, {12});
  auto config = small_config({12});
  config.n_mc = 100000;
  const auto res = run_global(panels, config);
  REQUIRE(res.failures.empty());
  REQUIRE(res.hours.size() == 1);
  const auto& r = res.hours[0];
  CHECK(r.quadrivariate());
  Eigen::Matrix4d corr;
  corr << 1.0, 0.6, -0.4, -0.3, 0.6, 1.0, 0.1, 0.2, -0.4, 0.1, 1.0, -0.1, -0.3, 0.2, -0.1, 1.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const double target = 6.0 / std::numbers::pi * std::asin(corr(i, j) / 2.0);
      CHECK(std::abs(r.spearman(i, j) - target) < 0.05);
    }
  CHECK(r.scenarios.size() == 5);
  CHECK(r.tdc.size() == 6);
  CHECK(r.lambda_lower.has_value());
}

TEST_CASE("hour split, empty requests and failure isolation") {
  SynthConfig cfg;
  cfg.days = 400;
  cfg.seed = 4;
  auto panels = panels_of(synthesize(cfg).records, {3, 5, 12});
  MatrixXd flat = panels[1].values();
  flat.col(0).setConstant(30.0);
  panels[1] = HourlyPanel(5, panels[1].dates(), flat);

  auto config = small_config({});
  CHECK(run_global(panels, config).hours.empty());

  config.hours = {3, 5, 12};
  const auto res = run_global(panels, config);
  REQUIRE(res.hours.size() == 2);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].hour == 5);
  CHECK(res.failures[0].code == ErrorCode::degenerate);
  CHECK(res.hours[0].hour == 3);
  CHECK_FALSE(res.hours[0].quadrivariate());
  std::vector<std::string> labels;
  for (const auto& s : res.hours[0].scenarios) labels.push_back(s.label);
  CHECK(labels == std::vector<std::string>{"HL", "HH", "LH"});
  CHECK(res.hours[1].quadrivariate());

  config.hours = {7};
  CHECK_THROWS_AS(run_global(panels, config), Error);
}

TEST_CASE("rolling windows") {
  SynthConfig cfg;
  cfg.days = 732;
  cfg.seed = 6;
  const auto panels = panels_of(synthesize(cfg).records, {10});
  auto config = small_config({10});
  config.window_days = 730;
  const auto rolls = run_rolling(panels, config);
  REQUIRE(rolls.size() == 1);
  const auto& r = rolls[0];
  CHECK(r.series.rows() == 3);
  CHECK(r.series.cols() == 6);
  CHECK(r.pair_labels[0] == "price-demand");
  for (std::size_t w = 0; w < 3; ++w) {
    CHECK_FALSE(r.skipped[w]);
    CHECK(r.window_end[w] == add_days(panels[0].dates()[729], static_cast<int>(w)));
  }
  CHECK(r.full_sample.size() == 6);
  CHECK(std::abs(r.series(0, 0) - r.full_sample[0]) < 0.1);

  config.window_days = 732;
  CHECK_THROWS_AS(run_rolling(panels, config), Error);
}

TEST_CASE("report bundle is deterministic and guarded") {
  SynthConfig cfg;
  cfg.days = 420;
  cfg.seed = 8;
  const auto panels = panels_of(synthesize(cfg).records, {3, 12});
  auto config = small_config({3, 12});
  config.window_days = 400;
  config.step_days = 10;
  const auto d1 = scratch("report1");
  const auto d2 = scratch("report2");
  for (const auto& [dir, jobs] : {std::pair{d1, 1}, std::pair{d2, 3}}) {
    config.jobs = jobs;
    const auto g = run_global(panels, config);
    const auto r = run_rolling(panels, config);
    write_report(dir, config, &g, &r, false);
  }
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(d1)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  CHECK(names == std::vector<std::string>{"hour_03.json", "hour_12.json", "rolling.csv", "run.json", "tail.csv"});
  for (const auto& n : names) CHECK(slurp(d1 / n) == slurp(d2 / n));

  const auto tail = slurp(d1 / "tail.csv");
  CHECK(tail.rfind("hour,measure,side,pattern,alpha,beta,value,ratio,stderr,reliable\n", 0) == 0);
  CHECK(tail.find("12,scenario,upper,HLL,") != std::string::npos);
  CHECK(tail.find("3,scenario,upper,HL,") != std::string::npos);

  const auto h12 = Json::parse(slurp(d1 / "hour_12.json"));
  const auto vine = h12.at("vine").get<VineModel>();
  CHECK(vine.dim() == 4);

  const auto g = run_global(panels, config);
  CHECK_THROWS_AS(write_report(d1, config, &g, nullptr, false), Error);
  CHECK_NOTHROW(write_report(d1, config, &g, nullptr, true));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}
