#pragma once

#include "vinetail/data.hpp"
#include "vinetail/optim.hpp"
#include "vinetail/stats.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vinetail {

enum class Innovation { gaussian };
enum class PitMode { parametric, rank };

std::string_view to_string(PitMode mode);
PitMode parse_pit_mode(std::string_view name);

struct MarginalSpec {
  std::vector<int> lags{1};  // AR lags in days, e.g. {1, 2, 7}
  int n_dummies = CalendarDummies::kColumns;
  Innovation innovation = Innovation::gaussian;

  int max_lag() const;
  void validate() const;
};

// Price uses lags {1, 2, 7}; demand, wind and solar use {1}.
MarginalSpec default_spec(Variable v);

// y_t = sum_j phi_j y_{t - lag_j} + sum_k psi_k D_{t,k} + eps_t,
// eps_t = sigma_t eta_t, sigma2_t = omega + alpha eps_{t-1}^2 + beta sigma2_{t-1}.
// There is no separate intercept: the month dummies sum to one.
struct ArGarchParams {
  VectorXd phi;
  VectorXd psi;
  double omega = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct MarginalFit {
  MarginalSpec spec;
  ArGarchParams params;
  VectorXd sigma2;      // conditional variances, length T - max_lag
  VectorXd residuals;   // standardised innovations eta
  VectorXd pseudo_obs;  // PIT of the residuals
  PitMode pit_mode = PitMode::parametric;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> warnings;
};

struct FitOptions {
  MinimizeOptions minimize;
  PitMode pit_mode = PitMode::parametric;
  std::optional<ArGarchParams> start;  // default: least squares + (0.05, 0.85)
};

// alpha + beta never exceeds this.
constexpr double kGarchStability = 1.0 - 1e-6;

// Joint Gaussian maximum likelihood of mean and variance equations. The
// variance recursion starts at the sample variance of the mean residuals.
// Throws degenerate for a (near) constant series and optimization when the
// iteration budget runs out.
MarginalFit fit_ar_garch(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                         const FitOptions& options = {});

struct GarchFilter {
  VectorXd epsilon;
  VectorXd sigma2;
  VectorXd residuals;
  double loglik = 0.0;
};

GarchFilter garch_filter(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                         const ArGarchParams& params);
double ar_garch_loglik(const VectorXd& series, const MatrixXd& dummies, const MarginalSpec& spec,
                       const ArGarchParams& params);
VectorXd filter_residuals(const MarginalFit& fit, const VectorXd& series, const MatrixXd& dummies);

// Parametric: Phi(eta) clamped into (0, 1). Rank: ordinal rank / (T + 1).
VectorXd pit_transform(const VectorXd& residuals, PitMode mode = PitMode::parametric);

// Runs the recursion on given innovations. The first burn_in innovations
// warm up the process (using the first dummy row) and are discarded; the
// remaining ones produce dummies.rows() observations. An empty dummy matrix
// means psi is ignored.
VectorXd ar_garch_path(const ArGarchParams& params, const MarginalSpec& spec, const MatrixXd& dummies,
                       const VectorXd& innovations, Index burn_in);

VectorXd simulate_ar_garch(const ArGarchParams& params, const MarginalSpec& spec, const MatrixXd& dummies,
                           Index horizon, std::uint64_t seed, Index burn_in = 500);

}  // namespace vinetail
