// One line per acceptance criterion; exit status is the number of failures.

#include "oracles.hpp"
#include "vinetail/bicop.hpp"
#include "vinetail/error.hpp"
#include "vinetail/marginals.hpp"
#include "vinetail/pipeline.hpp"
#include "vinetail/rng.hpp"
#include "vinetail/taildep.hpp"
#include "vinetail/vine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace vinetail;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(const char* name, const std::function<Outcome()>& criterion) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MatrixXd uniforms(Index m, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd u(m, cols);
  for (Index i = 0; i < m; ++i)
    for (Index k = 0; k < cols; ++k) u(i, k) = rng.uniform();
  return u;
}

MatrixXd calendar(Index days) {
  std::vector<Date> dates;
  for (Index t = 0; t < days; ++t) dates.push_back(add_days(parse_date("2010-01-01"), static_cast<int>(t)));
  return build_dummies(dates).matrix;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

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

Outcome garch_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = 5000;
  const MatrixXd d = calendar(n);
  ArGarchParams truth;
  truth.phi = VectorXd::Constant(1, 0.5);
  truth.psi = VectorXd::Zero(CalendarDummies::kColumns);
  truth.omega = 0.1;
  truth.alpha = 0.1;
  truth.beta = 0.8;
  std::vector<double> dphi, dpersist;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const VectorXd y = simulate_ar_garch(truth, MarginalSpec{}, d, n, seed);
    const auto fit = fit_ar_garch(y, d, MarginalSpec{});
    dphi.push_back(std::abs(fit.params.phi[0] - 0.5));
    dpersist.push_back(std::abs(fit.params.alpha + fit.params.beta - 0.9));
  }
  const double secs = seconds_since(t0);
  const double mp = median(dphi), ms = median(dpersist);
  return {mp <= 0.05 && ms <= 0.08 && secs < 120.0,
          fmt("median |dphi| = %.4f (<= 0.05), median |d(alpha+beta)| = %.4f (<= 0.08), %.1fs (< 120s)", mp, ms, secs)};
}

Outcome copula_closed_forms() {
  const double t = 1e-4;
  const auto cl = BivariateCopula::clayton(2.0);
  const auto gu = BivariateCopula::gumbel(2.0);
  const double lower_numeric = cdf(cl, t, t) / t;
  const double upper_numeric = (2.0 * t - 1.0 + cdf(gu, 1.0 - t, 1.0 - t)) / t;
  const double el = std::abs(lower_numeric - std::pow(2.0, -0.5));
  const double eu = std::abs(upper_numeric - (2.0 - std::sqrt(2.0)));
  const double cl_closed = std::abs(lower_tdc(cl) - std::pow(2.0, -0.5));
  const double gu_closed = std::abs(upper_tdc(gu) - (2.0 - std::sqrt(2.0)));
  return {el < 2e-2 && eu < 2e-2 && cl_closed < 1e-12 && gu_closed < 1e-12,
          fmt("clayton lower: closed %.6f numeric %.6f; gumbel upper: closed %.6f numeric %.6f (tol 2e-2)",
              lower_tdc(cl), lower_numeric, upper_tdc(gu), upper_numeric)};
}

Outcome family_selection() {
  const auto candidates = default_candidates();
  int hits = 0;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    const MatrixXd u = sample(BivariateCopula::clayton(2.0), 1000, derive_seed(2024, {rep}));
    const auto best = select_family_aic(u, candidates);
    hits += best.copula.family() == Family::clayton && best.copula.rotation() == 0;
  }
  return {hits >= 190, fmt("clayton selected in %d/200 (>= 190)", hits)};
}

Outcome kendall_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const Index m = 100000;
  auto sup = [](const KendallFunction& a, const KendallFunction& b) {
    double d = 0.0;
    for (int k = 1; k <= 99; ++k) d = std::max(d, std::abs(a(k / 100.0) - b(k / 100.0)));
    return d;
  };
  const double d_cl = sup(empirical_kendall_fn(sample(BivariateCopula::clayton(2.0), m, 11)),
                          KendallFunction::analytic(Family::clayton, 2.0));
  const double d_ind = sup(empirical_kendall_fn(uniforms(m, 2, 12)), KendallFunction::analytic(Family::independence));
  const double secs = seconds_since(t0);
  return {d_cl < 0.02 && d_ind < 0.02 && secs < 30.0,
          fmt("sup distance clayton(2) %.4f, independence %.4f (< 0.02), %.1fs (< 30s)", d_cl, d_ind, secs)};
}

Outcome independence_identity() {
  int inside = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const MatrixXd u = uniforms(100000, 3, derive_seed(77, {rep}));
    const auto r = q_lower_kendall(u.leftCols(2), u.col(2), 0.05, 0.05);
    inside += std::abs(r.value - 0.05) < 3.0 * r.std_error;
  }
  return {inside >= 95, fmt("|q_L - beta| < 3 stderr in %d/100 (>= 95)", inside)};
}

Outcome exact_counting() {
  int equal = 0;
  Rng rng(31);
  for (std::uint64_t c = 0; c < 20; ++c) {
    const Index m = 500 + static_cast<Index>(rng.uniform() * 1500);
    const double alpha = 0.02 + 0.3 * rng.uniform();
    const double beta = 0.02 + 0.3 * rng.uniform();
    MatrixXd x;
    VectorXd y;
    switch (c % 4) {
      case 0: {
        const MatrixXd s = sample(BivariateCopula::clayton(2.0), m, c);
        x = s;
        y = s.col(0);
        break;
      }
      case 1: {
        const MatrixXd s = oracle::tied_sample(m, 3, 8, c);
        x = s.leftCols(2);
        y = s.col(2);
        break;
      }
      case 2: {
        const MatrixXd s = oracle::tied_sample(m, 4, 15, c);
        x = s.leftCols(3);
        y = s.col(3);
        break;
      }
      default: {
        const MatrixXd s = uniforms(m, 4, c);
        x = s.leftCols(3);
        y = s.col(3);
      }
    }
    const auto r = q_lower_kendall(x, y, alpha, beta);
    const auto ref = oracle::lower_kendall(x, y, alpha, beta);
    equal += r.n_cond == ref.cond && r.n_joint == ref.joint && r.value == ref.value();
  }
  return {equal == 20, fmt("%d/20 cases equal to the brute-force count", equal)};
}

Outcome vine_round_trip() {
  Eigen::Matrix3d r;
  r << 1.0, 0.7, 0.3, 0.7, 1.0, -0.4, 0.3, -0.4, 1.0;
  const auto generator = gaussian_vine(VineStructure::d_vine({0, 1, 2}), r);
  const MatrixXd u = pseudo_observations(simulate(generator, 5000, 41));
  const auto fitted = select_and_fit(u, default_candidates());
  const MatrixXd s = induced_spearman_matrix(fitted, 200000, 42);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      worst = std::max(worst, std::abs(s(i, j) - 6.0 / std::numbers::pi * std::asin(r(i, j) / 2.0)));
  return {worst <= 0.04, fmt("max |induced - analytic Spearman| = %.4f (<= 0.04), n = 5000", worst)};
}

Outcome tail_concentration_ordering() {
  const std::vector<double> betas{0.005, 0.01, 0.02};
  auto curve = [&](const BivariateCopula& c, std::uint64_t seed) {
    return tail_concentration(sample(c, 1000000, seed), 0.05, betas);
  };
  const auto ga = curve(BivariateCopula::gaussian(parameter_from_spearman(Family::gaussian, 0.5)), 51);
  const auto gu = curve(BivariateCopula::gumbel(parameter_from_spearman(Family::gumbel, 0.5)), 52);
  const auto cl = curve(BivariateCopula::clayton(parameter_from_spearman(Family::clayton, 0.5)), 53);
  bool ok = true;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    ok &= cl[k].lower > ga[k].lower && cl[k].lower > gu[k].lower;
    ok &= gu[k].upper > ga[k].upper && gu[k].upper > cl[k].upper;
  }
  return {ok, fmt("beta=0.005: q_L clayton %.3f gauss %.3f gumbel %.3f; q_U gumbel %.3f gauss %.3f clayton %.3f",
                  cl[0].lower, ga[0].lower, gu[0].lower, gu[0].upper, ga[0].upper, cl[0].upper)};
}

Outcome rolling_mechanics() {
  SynthConfig synth;
  synth.days = 400;
  synth.seed = 61;
  const auto small = panels_of(synthesize(synth).records, {3});
  const std::vector<std::pair<Index, Index>> combos{{350, 25}, {380, 10}, {390, 5}, {399, 1}, {300, 50},
                                                    {320, 40}, {360, 20}, {395, 2}, {370, 15}, {200, 100}};
  int exact = 0;
  for (const auto& [w, s] : combos) {
    AnalysisConfig c;
    c.hours = {3};
    c.window_days = w;
    c.step_days = s;
    c.n_mc_rolling = 10000;
    const auto r = run_rolling(small, c);
    Index brute = 0;
    for (Index first = 0; first + w <= small[0].days(); first += s) ++brute;
    exact += r[0].series.rows() == (small[0].days() - w) / s + 1 && r[0].series.rows() == brute &&
             window_count(small[0].days(), w, s) == brute;
  }

  synth.days = 1500;
  synth.seed = 62;
  const auto panel = panels_of(synthesize(synth).records, {3});
  AnalysisConfig c;
  c.hours = {3};
  c.window_days = 730;
  c.step_days = 60;
  c.n_mc_rolling = 50000;
  const auto r = run_rolling(panel, c)[0];
  bool within = true;
  std::string worst;
  double worst_ratio = 0.0;
  for (Index k = 0; k < r.series.cols(); ++k) {
    double dev = 0.0, band = 0.0;
    for (Index w = 0; w < r.series.rows(); ++w) {
      dev += std::abs(r.series(w, k) - r.full_sample[k]);
      band += std::hypot(r.std_error(w, k), r.full_sample_error[k]);
    }
    const double ratio = dev / band;
    within &= ratio < 3.0;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = r.pair_labels[static_cast<std::size_t>(k)];
    }
  }
  return {exact == 10 && within,
          fmt("window count exact on %d/10 combinations; largest mean |deviation| / error band = %.2f (%s, < 3)", exact,
              worst_ratio, worst.c_str())};
}

Outcome end_to_end_determinism() {
  SynthConfig synth;
  synth.days = 800;
  synth.seed = 7;
  synth.clock_changes = true;
  AnalysisConfig c;
  c.hours = {3, 12};
  c.n_mc = 20000;
  c.n_mc_tail = 100000;
  c.window_days = 730;
  c.step_days = 35;
  const auto base = std::filesystem::temp_directory_path() / "vinetail_acceptance";
  std::filesystem::remove_all(base);
  std::vector<std::filesystem::path> dirs;
  for (int run = 0; run < 2; ++run) {
    const auto data = synthesize(synth);
    const auto panels = panels_of(data.records, c.hours);
    c.jobs = run + 1;
    const auto g = run_global(panels, c);
    const auto r = run_rolling(panels, c);
    dirs.push_back(base / std::to_string(run));
    write_report(dirs.back(), c, &g, &r, false, data.metadata);
  }
  int files = 0, same = 0;
  for (const auto& e : std::filesystem::directory_iterator(dirs[0])) {
    ++files;
    same += slurp(e.path()) == slurp(dirs[1] / e.path().filename());
  }
  std::filesystem::remove_all(base);
  return {files == 5 && same == files, fmt("%d/%d report files byte-identical across two runs", same, files)};
}

}  // namespace

int main() {
  run("garch_recovery", garch_recovery);
  run("copula_closed_forms", copula_closed_forms);
  run("family_selection", family_selection);
  run("kendall_function_oracle", kendall_oracle);
  run("independence_identity", independence_identity);
  run("exact_counting", exact_counting);
  run("vine_round_trip", vine_round_trip);
  run("tail_concentration_figure", tail_concentration_ordering);
  run("rolling_mechanics", rolling_mechanics);
  run("end_to_end_determinism", end_to_end_determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
