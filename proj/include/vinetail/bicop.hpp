#pragma once

#include "vinetail/stats.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vinetail {

// Listed in tie-break order for family selection.
enum class Family { independence, gaussian, student_t, clayton, gumbel, frank };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);
int parameter_count(Family f);

/// A parametric bivariate copula, optionally rotated.
///
/// Parameter domains: Gaussian rho in (-1, 1); Student t (rho, nu) with
/// nu > 2; Clayton theta > 0; Gumbel theta >= 1; Frank theta != 0.
/// Rotations are counter-clockwise reflections of the unit square:
///   90:  C(u, v) = v - C0(1 - u, v)
///   180: C(u, v) = u + v - 1 + C0(1 - u, 1 - v)   (survival copula)
///   270: C(u, v) = u - C0(u, 1 - v)
class BivariateCopula {
 public:
  BivariateCopula() = default;
  BivariateCopula(Family family, VectorXd params, int rotation = 0);

  static BivariateCopula independence() { return {}; }
  static BivariateCopula gaussian(double rho);
  static BivariateCopula student_t(double rho, double nu);
  static BivariateCopula clayton(double theta, int rotation = 0);
  static BivariateCopula gumbel(double theta, int rotation = 0);
  static BivariateCopula frank(double theta);

  Family family() const noexcept { return family_; }
  const VectorXd& params() const noexcept { return params_; }
  int rotation() const noexcept { return rotation_; }
  int parameter_count() const noexcept { return vinetail::parameter_count(family_); }

  std::string describe() const;

  friend bool operator==(const BivariateCopula& a, const BivariateCopula& b) {
    return a.family_ == b.family_ && a.rotation_ == b.rotation_ && a.params_ == b.params_;
  }

 private:
  Family family_ = Family::independence;
  VectorXd params_;
  int rotation_ = 0;
};

double cdf(const BivariateCopula& c, double u, double v);
double pdf(const BivariateCopula& c, double u, double v);
double log_pdf(const BivariateCopula& c, double u, double v);

// hfunc1 = dC/du = P(V <= v | U = u); hfunc2 = dC/dv = P(U <= u | V = v).
double hfunc1(const BivariateCopula& c, double u, double v);
double hfunc2(const BivariateCopula& c, double u, double v);
inline double hfunc(const BivariateCopula& c, double u, double v, int margin) {
  return margin == 1 ? hfunc1(c, u, v) : hfunc2(c, u, v);
}
// hinv1 returns v with hfunc1(u, v) = p; hinv2 returns u with hfunc2(u, v) = p.
double hinv1(const BivariateCopula& c, double p, double u);
double hinv2(const BivariateCopula& c, double p, double v);

// Column-wise versions over paired vectors.
VectorXd hfunc1(const BivariateCopula& c, const VectorXd& u, const VectorXd& v);
VectorXd hfunc2(const BivariateCopula& c, const VectorXd& u, const VectorXd& v);
VectorXd hinv1(const BivariateCopula& c, const VectorXd& p, const VectorXd& u);
VectorXd hinv2(const BivariateCopula& c, const VectorXd& p, const VectorXd& v);

// Sum of log densities over an n x 2 matrix of pairs.
double loglik(const BivariateCopula& c, const Eigen::Ref<const MatrixXd>& pairs);

// n x 2 draws via the conditional inversion method.
MatrixXd sample(const BivariateCopula& c, Index n, std::uint64_t seed);

double tau_of(const BivariateCopula& c);
double spearman_of(const BivariateCopula& c);
double lower_tdc(const BivariateCopula& c);
double upper_tdc(const BivariateCopula& c);

// Parameter of an unrotated one-parameter family with the given Kendall's tau
// or Spearman's rho.
double parameter_from_tau(Family f, double tau);
double parameter_from_spearman(Family f, double rho_s);

struct FitResult {
  BivariateCopula copula;
  double loglik = 0.0;
  double aic = 0.0;
  Index n_obs = 0;
  bool at_boundary = false;
  std::vector<std::string> notes;
};

struct Candidate {
  Family family = Family::independence;
  int rotation = 0;
};

std::vector<Candidate> default_candidates();
// e.g. "indep,gaussian,t,clayton,gumbel,frank"; Clayton and Gumbel expand to
// all four rotations.
std::vector<Candidate> parse_candidates(std::string_view list);

// Maximum likelihood for one family. Starts from the inverted empirical
// Kendall's tau. Throws family_infeasible when the sample's tau has the wrong
// sign for the (rotated) family.
FitResult fit_mle(const Eigen::Ref<const MatrixXd>& pairs, Family family, int rotation = 0);

// Minimum-AIC candidate. Candidates that fail to fit are skipped and listed
// in the notes; ties go to the earlier family in enum order, then to the
// smaller parameter count.
FitResult select_family_aic(const Eigen::Ref<const MatrixXd>& pairs, std::span<const Candidate> candidates);

}  // namespace vinetail
