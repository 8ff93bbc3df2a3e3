#include "vinetail/marginals.hpp"

#include "vinetail/error.hpp"
#include "vinetail/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vinetail {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_inputs(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec) {
  spec.validate();
  if (dummies.cols() != spec.n_dummies)
    throw Error(ErrorCode::domain, "expected " + std::to_string(spec.n_dummies) + " dummy columns, got " +
                                       std::to_string(dummies.cols()));
  if (dummies.rows() != series.size()) throw Error(ErrorCode::domain, "dummies not aligned with the series");
  if (!series.allFinite()) throw Error(ErrorCode::domain, "series contains non-finite values");
}

// Design matrix of the mean equation over rows max_lag..T-1: lagged values
// followed by the selected dummy columns.
MatrixXd design(const VectorXd& y, const MatrixXd& dummies, const MarginalSpec& spec,
                const std::vector<Index>& dummy_cols) {
  const Index lag = spec.max_lag();
  const Index n = y.size() - lag;
  MatrixXd x(n, static_cast<Index>(spec.lags.size() + dummy_cols.size()));
  for (std::size_t j = 0; j < spec.lags.size(); ++j)
    x.col(static_cast<Index>(j)) = y.segment(lag - spec.lags[j], n);
  for (std::size_t k = 0; k < dummy_cols.size(); ++k)
    x.col(static_cast<Index>(spec.lags.size() + k)) = dummies.col(dummy_cols[k]).tail(n);
  return x;
}

// Gaussian log-likelihood of the GARCH recursion on mean residuals; fills
// sigma2 when requested. Returns -inf when the recursion degenerates.
double garch_loglik(const VectorXd& eps, double omega, double alpha, double beta, VectorXd* sigma2) {
  const Index n = eps.size();
  double s2 = sample_variance(eps);
  if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (Index t = 0; t < n; ++t) {
    if (t > 0) s2 = omega + alpha * eps[t - 1] * eps[t - 1] + beta * s2;
    if (!(s2 > 0.0)) return -std::numeric_limits<double>::infinity();
    if (sigma2) (*sigma2)[t] = s2;
    acc += std::log(s2) + eps[t] * eps[t] / s2;
  }
  return -0.5 * (static_cast<double>(n) * kLog2Pi + acc);
}

// (alpha, beta) = c * softmax(0, x1, x2)[1..2] so that alpha + beta < c.
struct VarianceMap {
  static double alpha(double x1, double x2) { return kGarchStability * std::exp(x1) / norm(x1, x2); }
  static double beta(double x1, double x2) { return kGarchStability * std::exp(x2) / norm(x1, x2); }
  static double norm(double x1, double x2) { return 1.0 + std::exp(x1) + std::exp(x2); }
  static std::pair<double, double> inverse(double alpha, double beta) {
    alpha = std::max(alpha, 1e-8);
    beta = std::max(beta, 1e-8);
    const double slack = std::max(1.0 - (alpha + beta) / kGarchStability, 1e-8);
    return {std::log(alpha / (kGarchStability * slack)), std::log(beta / (kGarchStability * slack))};
  }
};

}  // namespace

std::string_view to_string(PitMode mode) { return mode == PitMode::rank ? "rank" : "parametric"; }

PitMode parse_pit_mode(std::string_view name) {
  if (name == "parametric" || name == "gaussian") return PitMode::parametric;
  if (name == "rank") return PitMode::rank;
  throw Error(ErrorCode::config, "unknown PIT mode '" + std::string(name) + "'");
}

int MarginalSpec::max_lag() const { return lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end()); }

void MarginalSpec::validate() const {
  if (lags.empty()) throw Error(ErrorCode::domain, "lag set is empty");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < 1) throw Error(ErrorCode::domain, "lags must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (lags[i] == lags[j]) throw Error(ErrorCode::domain, "repeated lag " + std::to_string(lags[i]));
  }
  if (n_dummies < 0) throw Error(ErrorCode::domain, "negative dummy count");
}

MarginalSpec default_spec(Variable v) {
  MarginalSpec spec;
  if (v == Variable::price) spec.lags = {1, 2, 7};
  return spec;
}

GarchFilter garch_filter(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                         const ArGarchParams& params) {
  check_inputs(series, dummies, spec);
  const Index lag = spec.max_lag();
  if (series.size() <= lag) throw Error(ErrorCode::domain, "series shorter than the largest lag");
  if (params.phi.size() != static_cast<Index>(spec.lags.size()) || params.psi.size() != spec.n_dummies)
    throw Error(ErrorCode::domain, "parameter sizes do not match the specification");
  std::vector<Index> all(static_cast<std::size_t>(spec.n_dummies));
  for (Index k = 0; k < spec.n_dummies; ++k) all[static_cast<std::size_t>(k)] = k;
  const MatrixXd x = design(series, dummies, spec, all);
  VectorXd coef(x.cols());
  coef << params.phi, params.psi;

  GarchFilter out;
  out.epsilon = series.tail(x.rows()) - x * coef;
  out.sigma2.resize(x.rows());
  out.loglik = garch_loglik(out.epsilon, params.omega, params.alpha, params.beta, &out.sigma2);
  if (!std::isfinite(out.loglik)) throw Error(ErrorCode::numerical, "conditional variance is not positive");
  out.residuals = out.epsilon.array() / out.sigma2.array().sqrt();
  return out;
}

double ar_garch_loglik(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                       const ArGarchParams& params) {
  return garch_filter(series, dummies, spec, params).loglik;
}

VectorXd filter_residuals(const MarginalFit& fit, const VectorXd& series, const MatrixXd& dummies) {
  return garch_filter(series, dummies, fit.spec, fit.params).residuals;
}

VectorXd pit_transform(const VectorXd& residuals, PitMode mode) {
  if (!residuals.allFinite()) throw Error(ErrorCode::domain, "residuals contain non-finite values");
  VectorXd u(residuals.size());
  if (mode == PitMode::rank) {
    const auto ranks = ordinal_ranks(residuals);
    const double denom = static_cast<double>(residuals.size()) + 1.0;
    for (Index i = 0; i < u.size(); ++i) u[i] = static_cast<double>(ranks[static_cast<std::size_t>(i)]) / denom;
    return u;
  }
  for (Index i = 0; i < u.size(); ++i) u[i] = std::clamp(normal_cdf(residuals[i]), 1e-15, 1.0 - 1e-15);
  return u;
}

MarginalFit fit_ar_garch(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                         const FitOptions& options) {
  check_inputs(series, dummies, spec);
  const Index lag = spec.max_lag();
  const Index t_len = series.size();
  if (t_len <= lag + 50)
    throw Error(ErrorCode::domain, "series of length " + std::to_string(t_len) + " is too short for max lag " +
                                       std::to_string(lag));

  const double mean = series.mean();
  const double scale = std::sqrt(sample_variance(series));
  if (!(scale > 1e-10 * std::max(1.0, std::abs(mean))))
    throw Error(ErrorCode::degenerate, "series has (near) zero variance");

  // Fit on the standardised scale; the model is scale-equivariant.
  const VectorXd y = series / scale;
  std::vector<Index> active;
  for (Index k = 0; k < dummies.cols(); ++k)
    if (dummies.col(k).tail(t_len - lag).cwiseAbs().sum() > 0.0) active.push_back(k);
  const MatrixXd x = design(y, dummies, spec, active);
  const VectorXd target = y.tail(x.rows());
  const Index n_mean = x.cols();

  VectorXd theta(n_mean + 3);
  if (options.start) {
    const auto& s = *options.start;
    if (s.phi.size() != static_cast<Index>(spec.lags.size()) || s.psi.size() != spec.n_dummies)
      throw Error(ErrorCode::domain, "start point does not match the specification");
    theta.head(static_cast<Index>(spec.lags.size())) = s.phi;
    for (std::size_t k = 0; k < active.size(); ++k)
      theta[static_cast<Index>(spec.lags.size() + k)] = s.psi[active[k]] / scale;
    theta[n_mean] = std::log(s.omega / (scale * scale));
    const auto [x1, x2] = VarianceMap::inverse(s.alpha, s.beta);
    theta[n_mean + 1] = x1;
    theta[n_mean + 2] = x2;
  } else {
    const VectorXd ols = x.completeOrthogonalDecomposition().solve(target);
    const double v = sample_variance(target - x * ols);
    theta.head(n_mean) = ols;
    theta[n_mean] = std::log(std::max(0.1 * v, 1e-8));
    const auto [x1, x2] = VarianceMap::inverse(0.05, 0.85);
    theta[n_mean + 1] = x1;
    theta[n_mean + 2] = x2;
  }

  VectorXd eps(x.rows());
  auto negll = [&](const VectorXd& th) {
    eps.noalias() = target - x * th.head(n_mean);
    const double ll = garch_loglik(eps, std::exp(th[n_mean]), VarianceMap::alpha(th[n_mean + 1], th[n_mean + 2]),
                                   VarianceMap::beta(th[n_mean + 1], th[n_mean + 2]), nullptr);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  const auto opt = minimize_bfgs(negll, theta, options.minimize);
  if (!opt.converged) {
    std::ostringstream os;
    os << "AR-GARCH likelihood did not converge in " << opt.iterations << " iterations (last loglik "
       << -opt.value << ")";
    throw Error(ErrorCode::optimization, os.str());
  }

  MarginalFit fit;
  fit.spec = spec;
  fit.params.phi = opt.x.head(static_cast<Index>(spec.lags.size()));
  fit.params.psi = VectorXd::Zero(spec.n_dummies);
  for (std::size_t k = 0; k < active.size(); ++k)
    fit.params.psi[active[k]] = opt.x[static_cast<Index>(spec.lags.size() + k)] * scale;
  fit.params.omega = std::exp(opt.x[n_mean]) * scale * scale;
  fit.params.alpha = VarianceMap::alpha(opt.x[n_mean + 1], opt.x[n_mean + 2]);
  fit.params.beta = VarianceMap::beta(opt.x[n_mean + 1], opt.x[n_mean + 2]);
  fit.converged = opt.converged;
  fit.iterations = opt.iterations;

  const auto filt = garch_filter(series, dummies, spec, fit.params);
  fit.sigma2 = filt.sigma2;
  fit.residuals = filt.residuals;
  fit.loglik = filt.loglik;
  fit.pit_mode = options.pit_mode;
  fit.pseudo_obs = pit_transform(fit.residuals, options.pit_mode);

  if (fit.params.alpha < 1e-4) fit.warnings.push_back("alpha at lower bound");
  if (fit.params.beta < 1e-4) fit.warnings.push_back("beta at lower bound");
  if (fit.params.alpha + fit.params.beta > kGarchStability - 1e-4) fit.warnings.push_back("alpha + beta at unit-root bound");
  if (active.size() != static_cast<std::size_t>(spec.n_dummies))
    fit.warnings.push_back(std::to_string(static_cast<std::size_t>(spec.n_dummies) - active.size()) +
                           " dummy column(s) empty in sample, coefficient fixed at 0");
  return fit;
}

VectorXd ar_garch_path(const ArGarchParams& params, const MarginalSpec& spec, const MatrixXd& dummies,
                       const VectorXd& innovations, Index burn_in) {
  spec.validate();
  const Index horizon = dummies.rows();
  if (horizon <= 0) throw Error(ErrorCode::domain, "horizon must be positive");
  if (innovations.size() != burn_in + horizon) throw Error(ErrorCode::domain, "innovation count mismatch");
  if (dummies.cols() != 0 && dummies.cols() != params.psi.size())
    throw Error(ErrorCode::domain, "dummy columns do not match psi");
  if (params.phi.size() != static_cast<Index>(spec.lags.size()))
    throw Error(ErrorCode::domain, "phi does not match the lag set");

  const double persistence = params.alpha + params.beta;
  double s2 = persistence < 1.0 ? params.omega / (1.0 - persistence) : params.omega;
  const Index total = burn_in + horizon;
  VectorXd y = VectorXd::Zero(total);
  double eps_prev = 0.0;
  for (Index t = 0; t < total; ++t) {
    if (t > 0) s2 = params.omega + params.alpha * eps_prev * eps_prev + params.beta * s2;
    double m = 0.0;
    for (std::size_t j = 0; j < spec.lags.size(); ++j) {
      const Index src = t - spec.lags[j];
      if (src >= 0) m += params.phi[static_cast<Index>(j)] * y[src];
    }
    if (dummies.cols() != 0) m += dummies.row(std::max<Index>(t - burn_in, 0)).dot(params.psi);
    eps_prev = std::sqrt(s2) * innovations[t];
    y[t] = m + eps_prev;
  }
  return y.tail(horizon);
}

VectorXd simulate_ar_garch(const ArGarchParams& params, const MarginalSpec& spec, const MatrixXd& dummies,
                           Index horizon, std::uint64_t seed, Index burn_in) {
  if (horizon <= 0) throw Error(ErrorCode::domain, "horizon must be positive");
  MatrixXd d = dummies;
  if (d.cols() == 0) d.resize(horizon, 0);
  if (d.rows() != horizon) throw Error(ErrorCode::domain, "dummies must have one row per simulated day");
  Rng rng(seed);
  VectorXd eta(burn_in + horizon);
  for (Index i = 0; i < eta.size(); ++i) eta[i] = rng.normal();
  return ar_garch_path(params, spec, d, eta, burn_in);
}

}  // namespace vinetail
