#include <doctest.h>

#include "vinetail/error.hpp"
#include "vinetail/marginals.hpp"
#include "vinetail/rng.hpp"

#include <cmath>
#include <cstring>

using namespace vinetail;

namespace {

MatrixXd calendar(Index days) {
  std::vector<Date> dates;
  for (Index t = 0; t < days; ++t) dates.push_back(add_days(parse_date("2010-01-01"), static_cast<int>(t)));
  return build_dummies(dates).matrix;
}

ArGarchParams ar1(double phi, double omega, double alpha, double beta) {
  ArGarchParams p;
  p.phi = VectorXd::Constant(1, phi);
  p.psi = VectorXd::Zero(CalendarDummies::kColumns);
  p.omega = omega;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

// Straightforward re-implementation of the likelihood for one lag set.
double oracle_loglik(const VectorXd& y, const MatrixXd& d, const std::vector<int>& lags, const ArGarchParams& p) {
  int lmax = 0;
  for (int l : lags) lmax = std::max(lmax, l);
  std::vector<double> eps;
  for (Index t = lmax; t < y.size(); ++t) {
    double m = 0;
    for (std::size_t j = 0; j < lags.size(); ++j) m += p.phi[static_cast<Index>(j)] * y[t - lags[j]];
    for (Index k = 0; k < d.cols(); ++k) m += p.psi[k] * d(t, k);
    eps.push_back(y[t] - m);
  }
  double mean = 0;
  for (double e : eps) mean += e;
  mean /= static_cast<double>(eps.size());
  double var = 0;
  for (double e : eps) var += (e - mean) * (e - mean);
  var /= static_cast<double>(eps.size() - 1);
  double s2 = var, ll = 0;
  for (std::size_t t = 0; t < eps.size(); ++t) {
    if (t > 0) s2 = p.omega + p.alpha * eps[t - 1] * eps[t - 1] + p.beta * s2;
    ll += -0.5 * (std::log(2 * M_PI) + std::log(s2) + eps[t] * eps[t] / s2);
  }
  return ll;
}

}  // namespace

TEST_CASE("default lag sets") {
  CHECK(default_spec(Variable::price).lags == std::vector<int>{1, 2, 7});
  CHECK(default_spec(Variable::demand).lags == std::vector<int>{1});
  CHECK(default_spec(Variable::wind).lags == std::vector<int>{1});
  CHECK(default_spec(Variable::solar).lags == std::vector<int>{1});
  CHECK(default_spec(Variable::price).n_dummies == 14);
}

TEST_CASE("pit_transform") {
  VectorXd eta(2);
  eta << 0.0, 1.96;
  const auto u = pit_transform(eta);
  CHECK(u[0] == 0.5);
  CHECK(u[1] == doctest::Approx(0.975).epsilon(1e-4));

  VectorXd r(3);
  r << 3.0, -1.0, 0.5;
  const auto ur = pit_transform(r, PitMode::rank);
  CHECK(ur[0] == 0.75);
  CHECK(ur[1] == 0.25);
  CHECK(ur[2] == 0.5);

  Rng rng(4);
  VectorXd big(999);
  for (Index i = 0; i < big.size(); ++i) big[i] = std::round(rng.normal() * 3);  // many ties
  VectorXd pr = pit_transform(big, PitMode::rank) * 1000.0;
  std::sort(pr.data(), pr.data() + pr.size());
  for (Index i = 0; i < pr.size(); ++i) CHECK(std::round(pr[i]) == static_cast<double>(i + 1));

  VectorXd extreme(2);
  extreme << -40.0, 40.0;
  const auto ue = pit_transform(extreme);
  CHECK(ue[0] > 0.0);
  CHECK(ue[1] < 1.0);
}

TEST_CASE("filter with constant variance") {
  const Index n = 300;
  const auto d = calendar(n);
  const VectorXd y = simulate_ar_garch(ar1(0.3, 2.0, 0.0, 0.0), MarginalSpec{}, d, n, 8);
  const auto p = ar1(0.3, 2.0, 0.0, 0.0);
  const auto f = garch_filter(y, d, MarginalSpec{}, p);
  for (Index t = 1; t < f.sigma2.size(); ++t) CHECK(f.sigma2[t] == 2.0);
  for (Index t = 1; t < f.residuals.size(); ++t)
    CHECK(f.residuals[t] == doctest::Approx((y[t + 1] - 0.3 * y[t]) / std::sqrt(2.0)));
  CHECK(f.loglik == doctest::Approx(oracle_loglik(y, d, {1}, p)).epsilon(1e-12));
}

TEST_CASE("likelihood agrees with an independent implementation") {
  const Index n = 400;
  const auto d = calendar(n);
  MarginalSpec spec;
  spec.lags = {1, 2, 7};
  ArGarchParams p;
  p.phi = VectorXd(3);
  p.phi << 0.4, 0.1, 0.2;
  p.psi = VectorXd::LinSpaced(14, -1.0, 1.0);
  p.omega = 0.3;
  p.alpha = 0.12;
  p.beta = 0.7;
  const VectorXd y = simulate_ar_garch(p, spec, d, n, 99);
  CHECK(ar_garch_loglik(y, d, spec, p) == doctest::Approx(oracle_loglik(y, d, spec.lags, p)).epsilon(1e-12));
}

TEST_CASE("parameter recovery") {
  const Index n = 5000;
  const auto d = calendar(n);
  const auto truth = ar1(0.5, 0.1, 0.1, 0.8);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const VectorXd y = simulate_ar_garch(truth, MarginalSpec{}, d, n, seed);
    const auto fit = fit_ar_garch(y, d, MarginalSpec{});
    CAPTURE(seed);
    CHECK(std::abs(fit.params.phi[0] - 0.5) <= 0.05);
    CHECK(std::abs(fit.params.alpha + fit.params.beta - 0.9) <= 0.08);
    CHECK(fit.params.omega > 0.0);
    CHECK(fit.params.alpha + fit.params.beta < 1.0);
    CHECK(fit.residuals.size() == n - 1);
    CHECK(std::abs(fit.residuals.mean()) < 0.1);
    CHECK(std::abs(sample_variance(fit.residuals) - 1.0) < 0.1);
    CHECK((fit.pseudo_obs.array() > 0.0).all());
    CHECK((fit.pseudo_obs.array() < 1.0).all());

    // recursion is bit-reproducible
    const auto again = filter_residuals(fit, y, d);
    CHECK(std::memcmp(again.data(), fit.residuals.data(), sizeof(double) * static_cast<std::size_t>(again.size())) == 0);
    const auto f = garch_filter(y, d, fit.spec, fit.params);
    CHECK(std::memcmp(f.sigma2.data(), fit.sigma2.data(), sizeof(double) * static_cast<std::size_t>(f.sigma2.size())) == 0);
    CHECK(fit.loglik == doctest::Approx(oracle_loglik(y, d, {1}, fit.params)).epsilon(1e-10));

    // residuals behave as serially independent
    const auto refit = fit_ar_garch(fit.residuals, d.bottomRows(fit.residuals.size()), MarginalSpec{});
    CHECK(std::abs(refit.params.phi[0]) < 0.05);
  }
}

TEST_CASE("scale equivariance") {
  const Index n = 1500;
  const auto d = calendar(n);
  const VectorXd y = simulate_ar_garch(ar1(0.4, 0.2, 0.08, 0.85), MarginalSpec{}, d, n, 5);
  const auto a = fit_ar_garch(y, d, MarginalSpec{});
  const auto b = fit_ar_garch(1000.0 * y, d, MarginalSpec{});
  CHECK(b.params.phi[0] == doctest::Approx(a.params.phi[0]).epsilon(1e-4));
  CHECK(b.params.alpha == doctest::Approx(a.params.alpha).epsilon(1e-3));
  CHECK(b.params.omega == doctest::Approx(a.params.omega * 1e6).epsilon(1e-3));
  CHECK(b.loglik == doctest::Approx(a.loglik - static_cast<double>(a.residuals.size()) * std::log(1000.0)).epsilon(1e-6));
}

TEST_CASE("i.i.d. noise has no dynamics") {
  const Index n = 3000;
  const auto d = calendar(n);
  Rng rng(77);
  VectorXd y(n);
  for (Index t = 0; t < n; ++t) y[t] = 5.0 + rng.normal();
  const auto fit = fit_ar_garch(y, d, MarginalSpec{});
  CHECK(std::abs(fit.params.phi[0]) < 0.05);
  CHECK(fit.params.alpha < 0.05);
  CHECK(fit.params.alpha + fit.params.beta < 1.0);
}

TEST_CASE("degenerate and malformed input") {
  const auto d = calendar(200);
  CHECK_THROWS_WITH_AS(fit_ar_garch(VectorXd::Constant(200, 3.0), d, MarginalSpec{}), doctest::Contains("variance"),
                       Error);
  try {
    fit_ar_garch(VectorXd::Constant(200, 3.0), d, MarginalSpec{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate);
  }
  CHECK_THROWS_AS(fit_ar_garch(VectorXd::LinSpaced(40, 0, 1), calendar(40), MarginalSpec{}), Error);
  MarginalSpec bad;
  bad.lags = {};
  CHECK_THROWS_AS(fit_ar_garch(VectorXd::LinSpaced(200, 0, 1), d, bad), Error);
  CHECK_THROWS_AS(fit_ar_garch(VectorXd::LinSpaced(200, 0, 1), d.leftCols(3), MarginalSpec{}), Error);
}

TEST_CASE("optimum beats random feasible restarts") {
  const Index n = 1200;
  const auto d = calendar(n);
  MarginalSpec spec;
  spec.lags = {1, 2, 7};
  ArGarchParams truth;
  truth.phi = VectorXd(3);
  truth.phi << 0.3, 0.15, 0.25;
  truth.psi = VectorXd::Constant(14, 2.0);
  truth.omega = 0.5;
  truth.alpha = 0.1;
  truth.beta = 0.8;
  const VectorXd y = simulate_ar_garch(truth, spec, d, n, 31);
  const auto best = fit_ar_garch(y, d, spec);
  Rng rng(12);
  for (int r = 0; r < 20; ++r) {
    ArGarchParams start = truth;
    for (Index j = 0; j < 3; ++j) start.phi[j] = 0.6 * rng.uniform() - 0.3;
    for (Index k = 0; k < 14; ++k) start.psi[k] = 6.0 * rng.uniform() - 1.0;
    start.omega = 0.05 + 2.0 * rng.uniform();
    start.alpha = 0.3 * rng.uniform();
    start.beta = (0.95 - start.alpha) * rng.uniform();
    CHECK(best.loglik >= ar_garch_loglik(y, d, spec, start));
    FitOptions opts;
    opts.start = start;
    const auto other = fit_ar_garch(y, d, spec, opts);
    CHECK(best.loglik >= other.loglik - 1e-3);
  }
}

TEST_CASE("simulation") {
  const Index n = 20000;
  const VectorXd a = simulate_ar_garch(ar1(0.0, 1.0, 0.0, 0.0), MarginalSpec{}, MatrixXd(), n, 3);
  CHECK(sample_variance(a) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(a == simulate_ar_garch(ar1(0.0, 1.0, 0.0, 0.0), MarginalSpec{}, MatrixXd(), n, 3));
  CHECK_FALSE(a == simulate_ar_garch(ar1(0.0, 1.0, 0.0, 0.0), MarginalSpec{}, MatrixXd(), n, 4));
  const VectorXd k = simulate_ar_garch(ar1(0.0, 0.05, 0.15, 0.8), MarginalSpec{}, MatrixXd(), n, 3);
  CHECK(sample_kurtosis(k) > 3.0);
}

TEST_CASE("Ljung-Box on residuals of correctly specified fits") {
  const Index n = 800;
  const auto d = calendar(n);
  const double crit = chi_squared_quantile(0.99, 10);
  int pass = 0;
  constexpr int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const VectorXd y = simulate_ar_garch(ar1(0.5, 0.1, 0.1, 0.8), MarginalSpec{}, d, n, derive_seed(2024, {std::uint64_t(r)}));
    const auto fit = fit_ar_garch(y, d, MarginalSpec{});
    pass += ljung_box(fit.residuals, 10) < crit;
  }
  CHECK(pass >= 190);
}
