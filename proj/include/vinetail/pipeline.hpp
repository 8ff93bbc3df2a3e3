#pragma once

#include "vinetail/data.hpp"
#include "vinetail/error.hpp"
#include "vinetail/marginals.hpp"
#include "vinetail/serialize.hpp"
#include "vinetail/taildep.hpp"
#include "vinetail/vine.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vinetail {

inline constexpr std::string_view kVersion = "0.1.0";

struct AnalysisConfig {
  std::vector<int> hours;
  Index window_days = 730;
  Index step_days = 1;
  double alpha = 0.05;
  double beta = 0.05;
  std::vector<double> lambda_grid{0.1, 0.08, 0.06, 0.04, 0.02, 0.01};
  std::vector<double> tdc_grid{0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
  Index n_mc = 100000;          // induced Spearman
  Index n_mc_tail = 1000000;    // tail coefficients and scenarios
  Index n_mc_rolling = 20000;   // induced Spearman per rolling window
  std::uint64_t seed = 1;
  std::vector<Candidate> candidates = default_candidates();
  std::string families = "indep,gaussian,t,clayton,gumbel,frank";
  PitMode pit_mode = PitMode::parametric;
  std::vector<std::string> scenarios{"HLL", "HHL", "HLH", "LHH", "LHL"};
  int jobs = 0;  // 0: hardware concurrency

  void validate() const;
};

// Flat key=value document; '#' starts a comment. Later keys win.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
// Applies recognised keys on top of `base`; unknown keys are a config error.
AnalysisConfig apply_config(AnalysisConfig base, const std::map<std::string, std::string>& values);
Json config_json(const AnalysisConfig& config);

std::vector<int> parse_hours(std::string_view text);

// Scenario patterns for a panel of the given dimension. Letters beyond the
// available conditioning variables are dropped and repeats removed, so the
// three-letter defaults become demand/wind patterns for trivariate hours.
std::vector<ScenarioPattern> scenarios_for(int dim, const std::vector<std::string>& labels, double alpha,
                                           double beta);

// Marginal fits of every column with pseudo-observations aligned on the
// days left after the largest lag.
struct PanelFit {
  std::vector<MarginalFit> marginals;
  MatrixXd pseudo_obs;
  Index first_row = 0;  // panel row of the first pseudo-observation
};
PanelFit fit_panel(const HourlyPanel& panel, PitMode pit_mode = PitMode::parametric);

struct PairTailRow {
  int i = 0;
  int j = 0;
  PairTail tail;
};

struct ScenarioRow {
  std::string label;
  TailMeasureResult result;
};

struct HourlyAnalysisResult {
  int hour = 0;
  std::vector<std::string> variables;
  std::vector<MarginalFit> marginals;
  VineModel vine;
  MatrixXd spearman;            // induced by the vine
  MatrixXd empirical_spearman;  // of the pseudo-observations
  std::vector<PairTailRow> tdc;
  std::optional<LambdaEstimate> lambda_lower;  // price given the other variables
  std::optional<LambdaEstimate> lambda_upper;
  std::vector<ScenarioRow> scenarios;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> warnings;

  bool quadrivariate() const { return vine.dim() == 4; }
};

struct JobFailure {
  int hour = 0;
  Index window = -1;
  ErrorCode code = ErrorCode::numerical;
  std::string message;
};

struct GlobalResult {
  std::vector<HourlyAnalysisResult> hours;
  std::vector<JobFailure> failures;
};

HourlyAnalysisResult analyse_hour(const HourlyPanel& panel, const AnalysisConfig& config);
// One job per hour; a failing hour is listed and the rest continue.
GlobalResult run_global(const std::vector<HourlyPanel>& panels, const AnalysisConfig& config);

Index window_count(Index days, Index window, Index step);

struct RollingResult {
  int hour = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::string> pair_labels;
  std::vector<Date> window_end;
  MatrixXd series;      // windows x pairs, NaN for skipped windows
  MatrixXd std_error;   // Monte Carlo and sampling error combined
  std::vector<bool> skipped;
  std::vector<std::string> skip_reason;
  VectorXd full_sample;
  VectorXd full_sample_error;
};

// Refits marginals and vine on every window; the dependence measure is the
// vine-induced Spearman correlation of each pair.
std::vector<RollingResult> run_rolling(const std::vector<HourlyPanel>& panels, const AnalysisConfig& config);

Json hour_json(const HourlyAnalysisResult& r);

// Report bundle: hour_HH.json per hour, tail.csv, rolling.csv when rolling
// results are given, run.json. Existing files are an `exists` error unless
// `force` is set. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const AnalysisConfig& config,
                                                const GlobalResult* global, const std::vector<RollingResult>* rolling,
                                                bool force, const Json& extra = Json::object());

void write_tail_csv(std::ostream& out, const std::vector<HourlyAnalysisResult>& hours);
void write_rolling_csv(std::ostream& out, const std::vector<RollingResult>& rolling);

// ---- synthetic data --------------------------------------------------------

enum class SynthPreset { independence, gaussian, clayton };
std::string_view to_string(SynthPreset p);
SynthPreset parse_preset(std::string_view name);

struct SynthConfig {
  Index days = 800;
  Date start{std::chrono::year{2015}, std::chrono::January, std::chrono::day{1}};
  SynthPreset preset = SynthPreset::gaussian;
  std::uint64_t seed = 1;
  bool clock_changes = false;  // drop hour 2 in late March, repeat it in late October
  double break_fraction = 0.0;  // in (0, 1): independence after this share of days
};

// Vine of the preset for a panel of the given dimension.
VineModel generator_vine(SynthPreset preset, int dim);
ArGarchParams generator_params(Variable v);

struct SynthData {
  std::vector<RawHourlyRecord> records;
  Json metadata;
};

SynthData synthesize(const SynthConfig& config);

// Copula and marginal parameters of the generator, for documentation.
Json generator_json(const SynthConfig& config);

}  // namespace vinetail
