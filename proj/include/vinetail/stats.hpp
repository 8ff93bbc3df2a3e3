#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace vinetail {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);
double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

// Average ranks (1-based, ties share the mean rank).
VectorXd average_ranks(const Eigen::Ref<const VectorXd>& x);

// Ordinal ranks 1..n; ties broken by position so the result is a permutation.
std::vector<Index> ordinal_ranks(const Eigen::Ref<const VectorXd>& x);

// Dense ranks 0..k-1 where k is the number of distinct values; strict order
// between values is preserved exactly.
std::vector<int> dense_ranks(const Eigen::Ref<const VectorXd>& x);

// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
double kendall_tau(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y);

double pearson(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y);
double spearman(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y);

// Column-wise rank / (n + 1).
MatrixXd pseudo_observations(const Eigen::Ref<const MatrixXd>& data);

double sample_variance(const Eigen::Ref<const VectorXd>& x);
double sample_kurtosis(const Eigen::Ref<const VectorXd>& x);

// Ljung-Box Q statistic at the given number of lags.
double ljung_box(const Eigen::Ref<const VectorXd>& x, int lags);
double chi_squared_quantile(double p, double dof);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y);

// Standard error of a Spearman correlation estimate from n observations
// (Bonett-Wright approximation).
double spearman_stderr(double rho, double n);

}  // namespace vinetail
