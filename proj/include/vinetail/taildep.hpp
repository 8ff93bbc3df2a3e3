#pragma once

#include "vinetail/bicop.hpp"
#include "vinetail/vine.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vinetail {

// Distribution function of the multivariate PIT F_X(X).
class KendallFunction {
 public:
  enum class Source { empirical, independence, clayton, gumbel };

  // Step function from sample values of the multivariate PIT.
  static KendallFunction empirical(std::vector<double> pit_values);
  // Closed forms: independence in any dimension, Clayton and Gumbel in two.
  static KendallFunction analytic(Family family, double theta = 0.0, int dim = 2);

  Source source() const noexcept { return source_; }
  double operator()(double t) const;
  // Smallest t with K(t) >= p.
  double inverse(double p) const;

 private:
  Source source_ = Source::independence;
  double theta_ = 0.0;
  int dim_ = 2;
  std::vector<double> sorted_;
};

// W_i = #{j : x_j < x_i in every coordinate} / m, for all rows at once.
// O(m log m) for two columns, O(m log^2 m) for three.
VectorXd multivariate_pit_sample(const Eigen::Ref<const MatrixXd>& sample);

// Empirical joint CDF of the reference sample at `row` (<= in every coordinate).
double multivariate_pit(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Eigen::Ref<const MatrixXd>& reference);

KendallFunction empirical_kendall_fn(const Eigen::Ref<const MatrixXd>& sample);

// Minimum conditioning count for a tail estimate to be reported as reliable.
constexpr Index kReliableCount = 20;

struct TailMeasureResult {
  double value = 0.0;
  // value / beta: 1 under independence for both sides.
  double ratio_vs_independence = 0.0;
  // value / (1 - beta): normalisation of the upper measure stated alongside
  // its definition; equals ratio_vs_independence * beta / (1 - beta).
  double ratio_remark = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double std_error = 0.0;
  double threshold = 0.0;  // Kendall quantile of the conditioning region
  Index n_cond = 0;
  Index n_joint = 0;
  bool reliable = false;
};

// P(Y <= y_beta | W <= t_L) with t_L the alpha-quantile of the Kendall
// function of X and y_beta the empirical beta-quantile of Y.
TailMeasureResult q_lower_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                                  double alpha, double beta);
// P(Y >= y_{1-beta} | W >= t_U) with t_U the (1 - alpha)-quantile.
TailMeasureResult q_upper_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                                  double alpha, double beta);

enum class TailSide { lower, upper };
std::string_view to_string(TailSide side);

struct LambdaEstimate {
  std::vector<TailMeasureResult> sequence;  // q(alpha, alpha) along the grid
  double intercept = 0.0;                   // least-squares extrapolation to alpha = 0
  double slope = 0.0;
  double smallest_reliable_alpha = 0.0;
  double smallest_reliable_value = 0.0;
  int reliable_points = 0;
};

// Grid must be strictly decreasing inside (0, 0.1]. Throws resolution when no
// grid point is reliable.
LambdaEstimate lambda_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y, TailSide side,
                              std::span<const double> alpha_grid);

enum class Direction { low, high };

// Conditioning variables with their extreme directions plus the target.
struct ScenarioPattern {
  std::vector<int> variables;
  std::vector<Direction> directions;
  int target = 0;
  Direction target_direction = Direction::high;
  double alpha = 0.05;
  double beta = 0.05;

  // Letters for variables 1, 2, ... in order, '.' skips a variable; the
  // target direction follows the first letter unless given after '/'.
  std::string label() const;
  void validate(int dim) const;
};

ScenarioPattern parse_scenario(std::string_view text, int dim, double alpha = 0.05, double beta = 0.05);
// Every H/L assignment of the non-target variables of the given dimension.
std::vector<std::string> scenario_labels(int dim);

// Reflects every low coordinate (target included) and evaluates the upper
// Kendall measure on the reflected sample.
TailMeasureResult scenario_tail_coefficient(const Eigen::Ref<const MatrixXd>& sample, const ScenarioPattern& pattern);
TailMeasureResult scenario_tail_coefficient(const VineModel& model, const ScenarioPattern& pattern, Index n_mc,
                                            std::uint64_t seed);

struct ConcentrationPoint {
  double beta = 0.0;
  double lower = 0.0;  // C(alpha, beta) / alpha
  double upper = 0.0;  // P(U > 1 - alpha, V > 1 - beta) / alpha
};

std::vector<ConcentrationPoint> tail_concentration(const Eigen::Ref<const MatrixXd>& pairs, double alpha,
                                                   std::span<const double> beta_grid);

}  // namespace vinetail
