#pragma once

#include "vinetail/bicop.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vinetail {

// Edge (a, b | given) of an R-vine. In tree k > 0 the edge joins the edges
// `left` and `right` of tree k - 1; its copula takes (u_{a|given}, u_{b|given}).
struct VineEdge {
  int a = 0;
  int b = 0;
  std::vector<int> given;  // sorted
  int left = -1;
  int right = -1;

  // {a, b} plus the conditioning set, as a bit mask over variables.
  unsigned mask() const;
  std::string label() const;
  friend bool operator==(const VineEdge&, const VineEdge&) = default;
};

class VineStructure {
 public:
  VineStructure() = default;
  // Validates tree shapes and the proximity condition.
  VineStructure(int dim, std::vector<std::vector<VineEdge>> trees);

  // Builds tree k from the parent index pairs of each edge; the conditioned
  // and conditioning sets follow from the parents.
  static VineStructure from_parents(int dim, const std::vector<std::pair<int, int>>& first_tree,
                                    const std::vector<std::vector<std::pair<int, int>>>& deeper);
  static VineStructure d_vine(std::vector<int> order);
  static VineStructure c_vine(std::vector<int> order);

  int dim() const noexcept { return dim_; }
  const std::vector<std::vector<VineEdge>>& trees() const noexcept { return trees_; }
  int edge_count() const noexcept { return dim_ * (dim_ - 1) / 2; }

  friend bool operator==(const VineStructure&, const VineStructure&) = default;

 private:
  int dim_ = 0;
  std::vector<std::vector<VineEdge>> trees_;
};

// Joins two edges of the previous tree; throws domain when they violate the
// proximity condition.
VineEdge join_edges(const VineEdge& left, const VineEdge& right, int left_index, int right_index);

struct EdgeFit {
  BivariateCopula copula;
  double loglik = 0.0;
  double aic = 0.0;
  std::vector<std::string> notes;
};

struct VineModel {
  VineStructure structure;
  std::vector<std::vector<EdgeFit>> edges;  // parallel to structure.trees()
  Index n_obs = 0;

  int dim() const noexcept { return structure.dim(); }
  // Sum of the fitted edge log-likelihoods.
  double loglik() const;
  double aic() const;
};

// Wraps fixed pair copulas into a model; copulas are listed tree by tree.
VineModel make_vine(VineStructure structure, const std::vector<std::vector<BivariateCopula>>& copulas);

// Gaussian pair copulas with the partial correlations of `correlation`, so
// that the vine is exactly the Gaussian copula with that correlation matrix.
VineModel gaussian_vine(VineStructure structure, const MatrixXd& correlation);

// Sequential maximum spanning tree selection: tree by tree, weights |tau| on
// the current pseudo-observations, Kruskal with lexicographic tie-breaking,
// pair copulas chosen by AIC to transform data for the next tree.
VineModel select_and_fit(const Eigen::Ref<const MatrixXd>& pseudo_obs, std::span<const Candidate> candidates);
VineStructure select_structure(const Eigen::Ref<const MatrixXd>& pseudo_obs, std::span<const Candidate> candidates);

// Fits pair copulas on a fixed structure.
VineModel fit_vine(const Eigen::Ref<const MatrixXd>& pseudo_obs, const VineStructure& structure,
                   std::span<const Candidate> candidates);

// Log-likelihood of a model on data, evaluated edge by edge.
double loglik(const VineModel& model, const Eigen::Ref<const MatrixXd>& pseudo_obs);
// Per-edge contributions, parallel to structure.trees().
std::vector<std::vector<double>> edge_logliks(const VineModel& model, const Eigen::Ref<const MatrixXd>& pseudo_obs);

// Inverse Rosenblatt sampling; n x dim in (0, 1).
MatrixXd simulate(const VineModel& model, Index n, std::uint64_t seed);
// Same transform applied to given independent uniforms (n x dim).
MatrixXd inverse_rosenblatt(const VineModel& model, const MatrixXd& uniforms);

// |tau| weight matrix of the columns.
MatrixXd tau_weights(const Eigen::Ref<const MatrixXd>& pseudo_obs);
double first_tree_weight(const VineStructure& structure, const MatrixXd& weights);
// Best total weight over every spanning tree of the complete graph.
double exhaustive_spanning_weight(const MatrixXd& weights);

struct MonteCarloValue {
  double value = 0.0;
  double std_error = 0.0;
};

MonteCarloValue induced_spearman(const VineModel& model, int i, int j, Index n_mc, std::uint64_t seed);
// All pairs from one sample; entry (i, j).
MatrixXd induced_spearman_matrix(const VineModel& model, Index n_mc, std::uint64_t seed);

struct TailPoint {
  double t = 0.0;
  double lower = 0.0;
  double lower_stderr = 0.0;
  double upper = 0.0;
  double upper_stderr = 0.0;
};

struct PairTail {
  std::vector<TailPoint> points;
  double lower_limit = 0.0;  // least-squares extrapolation to t = 0
  double upper_limit = 0.0;
};

// Empirical C(t, t) / t and its upper counterpart for each t of the grid.
// Throws resolution when n_mc * min(t) < 20.
PairTail pair_tail(const Eigen::Ref<const MatrixXd>& sample, int i, int j, std::span<const double> grid);
PairTail induced_pair_tdc(const VineModel& model, int i, int j, std::span<const double> grid, Index n_mc,
                          std::uint64_t seed);

}  // namespace vinetail
