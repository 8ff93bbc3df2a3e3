#include "vinetail/taildep.hpp"

#include "vinetail/error.hpp"
#include "vinetail/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinetail {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t pos, Index delta = 1) {
    for (++pos; pos < tree_.size(); pos += pos & (~pos + 1)) tree_[pos] += delta;
  }
  // Number of inserted positions < pos.
  Index count_below(std::size_t pos) const {
    Index s = 0;
    for (; pos > 0; pos -= pos & (~pos + 1)) s += tree_[pos];
    return s;
  }

 private:
  std::vector<Index> tree_;
};

struct RankedPoint {
  int r1, r2, r3;
  std::size_t id;
};

// Divide and conquer over the first coordinate (split only between distinct
// ranks), merge sort on the second, Fenwick tree on the third. On return the
// range is ordered by the second coordinate.
void dominance_3d(std::vector<RankedPoint>& pts, std::size_t lo, std::size_t hi, Fenwick& bit,
                  std::vector<RankedPoint>& buf, std::vector<Index>& count) {
  if (hi - lo <= 1) return;
  auto by_second = [](const RankedPoint& a, const RankedPoint& b) { return a.r2 < b.r2; };
  std::size_t mid = (lo + hi) / 2;
  while (mid > lo && pts[mid - 1].r1 == pts[mid].r1) --mid;
  if (mid == lo) {
    mid = (lo + hi) / 2;
    while (mid < hi && pts[mid - 1].r1 == pts[mid].r1) ++mid;
  }
  if (mid == hi) {
    std::stable_sort(pts.begin() + static_cast<std::ptrdiff_t>(lo), pts.begin() + static_cast<std::ptrdiff_t>(hi), by_second);
    return;
  }
  dominance_3d(pts, lo, mid, bit, buf, count);
  dominance_3d(pts, mid, hi, bit, buf, count);
  std::size_t i = lo;
  for (std::size_t j = mid; j < hi; ++j) {
    for (; i < mid && pts[i].r2 < pts[j].r2; ++i) bit.add(static_cast<std::size_t>(pts[i].r3));
    count[pts[j].id] += bit.count_below(static_cast<std::size_t>(pts[j].r3));
  }
  for (std::size_t k = lo; k < i; ++k) bit.add(static_cast<std::size_t>(pts[k].r3), -1);
  const auto first = pts.begin() + static_cast<std::ptrdiff_t>(lo);
  std::merge(first, pts.begin() + static_cast<std::ptrdiff_t>(mid), pts.begin() + static_cast<std::ptrdiff_t>(mid),
             pts.begin() + static_cast<std::ptrdiff_t>(hi), buf.begin(), by_second);
  std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(hi - lo), first);
}

// Rows sorted by the first coordinate, grouped by equal value so that
// strict dominance excludes points tied in that coordinate.
template <typename Query, typename Insert>
void sweep_first_coordinate(const std::vector<int>& first, Query query, Insert insert) {
  std::vector<std::size_t> order(first.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return first[a] < first[b]; });
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    while (end < order.size() && first[order[end]] == first[order[g]]) ++end;
    for (std::size_t k = g; k < end; ++k) query(order[k]);
    for (std::size_t k = g; k < end; ++k) insert(order[k]);
    g = end;
  }
}

Index order_count(double p, Index m) {
  // ceil(p * m) guarded against representation noise
  const double x = p * static_cast<double>(m);
  const double r = std::round(x);
  const Index k = std::abs(x - r) < 1e-9 * std::max(1.0, x) ? static_cast<Index>(r) : static_cast<Index>(std::ceil(x));
  return std::clamp<Index>(k, 1, m);
}

// k-th smallest (1-based) value.
double kth_smallest(const Eigen::Ref<const VectorXd>& v, Index k) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::nth_element(s.begin(), s.begin() + (k - 1), s.end());
  return s[static_cast<std::size_t>(k - 1)];
}

void check_tail_args(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y, double alpha,
                     double beta) {
  if (x.rows() != y.size()) throw Error(ErrorCode::domain, "conditioning sample and target differ in length");
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::domain, "empty sample");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::domain, "alpha must lie in (0, 0.5)");
  if (!(beta > 0.0 && beta < 0.5)) throw Error(ErrorCode::domain, "beta must lie in (0, 0.5)");
}

TailMeasureResult finish(Index joint, Index cond, double alpha, double beta, double threshold) {
  if (cond == 0) throw Error(ErrorCode::resolution, "empty conditioning region");
  TailMeasureResult r;
  r.n_cond = cond;
  r.n_joint = joint;
  r.value = static_cast<double>(joint) / static_cast<double>(cond);
  r.ratio_vs_independence = r.value / beta;
  r.ratio_remark = r.value / (1.0 - beta);
  r.alpha = alpha;
  r.beta = beta;
  r.std_error = std::sqrt(r.value * (1.0 - r.value) / static_cast<double>(cond));
  r.threshold = threshold;
  r.reliable = cond >= kReliableCount;
  return r;
}

// The Kendall sample of X: strict dominance counts, so a one-column X
// reduces to its own empirical ranks.
VectorXd collapse(const Eigen::Ref<const MatrixXd>& x) {
  if (x.cols() == 1) {
    const auto r = dense_ranks(x.col(0));
    std::vector<Index> below(r.size());
    // number of strictly smaller values = position of the first tie
    std::vector<std::size_t> order(r.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
    std::size_t g = 0;
    while (g < order.size()) {
      std::size_t end = g;
      while (end < order.size() && r[order[end]] == r[order[g]]) ++end;
      for (std::size_t k = g; k < end; ++k) below[order[k]] = static_cast<Index>(g);
      g = end;
    }
    VectorXd w(x.rows());
    for (Index i = 0; i < w.size(); ++i) w[i] = static_cast<double>(below[static_cast<std::size_t>(i)]) / static_cast<double>(x.rows());
    return w;
  }
  return multivariate_pit_sample(x);
}

}  // namespace

// ---- Kendall function ------------------------------------------------------

KendallFunction KendallFunction::empirical(std::vector<double> pit_values) {
  if (pit_values.empty()) throw Error(ErrorCode::domain, "empty Kendall sample");
  KendallFunction k;
  k.source_ = Source::empirical;
  std::sort(pit_values.begin(), pit_values.end());
  k.sorted_ = std::move(pit_values);
  return k;
}

KendallFunction KendallFunction::analytic(Family family, double theta, int dim) {
  KendallFunction k;
  k.dim_ = dim;
  k.theta_ = theta;
  switch (family) {
    case Family::independence:
      if (dim < 1) throw Error(ErrorCode::domain, "dimension must be positive");
      k.source_ = Source::independence;
      return k;
    case Family::clayton:
      if (dim != 2) throw Error(ErrorCode::unsupported, "analytic Kendall function only in two dimensions");
      if (!(theta > 0.0)) throw Error(ErrorCode::domain, "clayton theta must be positive");
      k.source_ = Source::clayton;
      return k;
    case Family::gumbel:
      if (dim != 2) throw Error(ErrorCode::unsupported, "analytic Kendall function only in two dimensions");
      if (!(theta >= 1.0)) throw Error(ErrorCode::domain, "gumbel theta must be at least 1");
      k.source_ = Source::gumbel;
      return k;
    default: break;
  }
  throw Error(ErrorCode::unsupported, "no analytic Kendall function for " + std::string(to_string(family)));
}

double KendallFunction::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  switch (source_) {
    case Source::empirical:
      return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), t) - sorted_.begin()) /
             static_cast<double>(sorted_.size());
    case Source::independence: {
      const double l = -std::log(t);
      double term = 1.0, sum = 1.0;
      for (int k = 1; k < dim_; ++k) {
        term *= l / k;
        sum += term;
      }
      return std::min(1.0, t * sum);
    }
    case Source::clayton: return std::min(1.0, t * (1.0 + (1.0 - std::pow(t, theta_)) / theta_));
    case Source::gumbel: return std::min(1.0, t * (1.0 - std::log(t) / theta_));
  }
  return t;
}

double KendallFunction::inverse(double p) const {
  if (p <= 0.0) return 0.0;
  if (source_ == Source::empirical) {
    const Index k = order_count(std::min(p, 1.0), static_cast<Index>(sorted_.size()));
    return sorted_[static_cast<std::size_t>(k - 1)];
  }
  if (p >= 1.0) return 1.0;
  return solve_monotone([&](double t) { return (*this)(t) - p; }, 0.0, p, 1e-14);
}

// ---- multivariate PIT ------------------------------------------------------

VectorXd multivariate_pit_sample(const Eigen::Ref<const MatrixXd>& sample) {
  const Index m = sample.rows();
  const Index l = sample.cols();
  if (l < 2) throw Error(ErrorCode::domain, "multivariate PIT needs at least two columns");
  if (m == 0) throw Error(ErrorCode::domain, "empty sample");
  std::vector<Index> count(static_cast<std::size_t>(m), 0);

  if (l == 2) {
    const auto r1 = dense_ranks(sample.col(0));
    const auto r2 = dense_ranks(sample.col(1));
    Fenwick bit(static_cast<std::size_t>(*std::max_element(r2.begin(), r2.end()) + 1));
    sweep_first_coordinate(
        r1, [&](std::size_t i) { count[i] = bit.count_below(static_cast<std::size_t>(r2[i])); },
        [&](std::size_t i) { bit.add(static_cast<std::size_t>(r2[i])); });
  } else if (l == 3) {
    const auto r1 = dense_ranks(sample.col(0));
    const auto r2 = dense_ranks(sample.col(1));
    const auto r3 = dense_ranks(sample.col(2));
    std::vector<RankedPoint> pts(static_cast<std::size_t>(m));
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {r1[i], r2[i], r3[i], i};
    std::stable_sort(pts.begin(), pts.end(), [](const RankedPoint& a, const RankedPoint& b) { return a.r1 < b.r1; });
    Fenwick bit(static_cast<std::size_t>(*std::max_element(r3.begin(), r3.end()) + 1));
    std::vector<RankedPoint> buf(pts.size());
    dominance_3d(pts, 0, pts.size(), bit, buf, count);
  } else {
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j)
        if ((sample.row(j).array() < sample.row(i).array()).all()) ++count[static_cast<std::size_t>(i)];
  }

  VectorXd w(m);
  for (Index i = 0; i < m; ++i) w[i] = static_cast<double>(count[static_cast<std::size_t>(i)]) / static_cast<double>(m);
  return w;
}

double multivariate_pit(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Eigen::Ref<const MatrixXd>& reference) {
  if (row.size() != reference.cols()) throw Error(ErrorCode::domain, "row and reference dimensions differ");
  if (reference.rows() == 0) throw Error(ErrorCode::domain, "empty reference sample");
  Index c = 0;
  for (Index j = 0; j < reference.rows(); ++j) c += (reference.row(j).array() <= row.array()).all();
  return static_cast<double>(c) / static_cast<double>(reference.rows());
}

KendallFunction empirical_kendall_fn(const Eigen::Ref<const MatrixXd>& sample) {
  if (sample.cols() < 2) throw Error(ErrorCode::domain, "Kendall function needs at least two columns; use the univariate CDF");
  const VectorXd w = multivariate_pit_sample(sample);
  return KendallFunction::empirical(std::vector<double>(w.data(), w.data() + w.size()));
}

// ---- conditional tail measures ----------------------------------------------

namespace {

TailMeasureResult lower_from_pit(const VectorXd& w, const Eigen::Ref<const VectorXd>& y, double alpha, double beta) {
  const Index m = w.size();
  const double t_low = kth_smallest(w, order_count(alpha, m));
  const double y_low = kth_smallest(y, order_count(beta, m));
  Index cond = 0, joint = 0;
  for (Index i = 0; i < m; ++i) {
    if (w[i] > t_low) continue;
    ++cond;
    joint += y[i] <= y_low;
  }
  return finish(joint, cond, alpha, beta, t_low);
}

TailMeasureResult upper_from_pit(const VectorXd& w, const Eigen::Ref<const VectorXd>& y, double alpha, double beta) {
  const Index m = w.size();
  const double t_high = kth_smallest(w, m + 1 - order_count(alpha, m));
  const double y_high = kth_smallest(y, m + 1 - order_count(beta, m));
  Index cond = 0, joint = 0;
  for (Index i = 0; i < m; ++i) {
    if (w[i] < t_high) continue;
    ++cond;
    joint += y[i] >= y_high;
  }
  return finish(joint, cond, alpha, beta, t_high);
}

}  // namespace

TailMeasureResult q_lower_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                                  double alpha, double beta) {
  check_tail_args(x, y, alpha, beta);
  return lower_from_pit(collapse(x), y, alpha, beta);
}

TailMeasureResult q_upper_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y,
                                  double alpha, double beta) {
  check_tail_args(x, y, alpha, beta);
  return upper_from_pit(collapse(x), y, alpha, beta);
}

std::string_view to_string(TailSide side) { return side == TailSide::lower ? "lower" : "upper"; }

LambdaEstimate lambda_kendall(const Eigen::Ref<const MatrixXd>& x, const Eigen::Ref<const VectorXd>& y, TailSide side,
                              std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw Error(ErrorCode::domain, "empty alpha grid");
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (!(alpha_grid[k] > 0.0 && alpha_grid[k] <= 0.1)) throw Error(ErrorCode::domain, "alpha grid must lie in (0, 0.1]");
    if (k > 0 && !(alpha_grid[k] < alpha_grid[k - 1])) throw Error(ErrorCode::domain, "alpha grid must be decreasing");
  }
  LambdaEstimate out;
  std::vector<double> xs, ys;
  check_tail_args(x, y, alpha_grid[0], alpha_grid[0]);
  const VectorXd w = collapse(x);
  for (double a : alpha_grid) {
    auto r = side == TailSide::lower ? lower_from_pit(w, y, a, a) : upper_from_pit(w, y, a, a);
    if (r.reliable) {
      xs.push_back(a);
      ys.push_back(r.value);
      out.smallest_reliable_alpha = a;
      out.smallest_reliable_value = r.value;
    }
    out.sequence.push_back(r);
  }
  out.reliable_points = static_cast<int>(xs.size());
  if (xs.empty()) throw Error(ErrorCode::resolution, "no alpha in the grid has at least 20 conditioning observations");
  if (xs.size() == 1) {
    out.intercept = ys[0];
  } else {
    const auto fit = least_squares_line(xs, ys);
    out.intercept = std::clamp(fit.intercept, 0.0, 1.0);
    out.slope = fit.slope;
  }
  return out;
}

// ---- scenarios ---------------------------------------------------------------

std::string ScenarioPattern::label() const {
  int last = 0;
  for (int v : variables) last = std::max(last, v);
  std::string s;
  for (int v = 0; v <= last; ++v) {
    if (v == target) continue;
    const auto it = std::find(variables.begin(), variables.end(), v);
    if (it == variables.end()) s += '.';
    else s += directions[static_cast<std::size_t>(it - variables.begin())] == Direction::high ? 'H' : 'L';
  }
  const Direction implied = directions.empty() ? Direction::high : directions.front();
  if (target_direction != implied) s += target_direction == Direction::high ? "/H" : "/L";
  return s;
}

void ScenarioPattern::validate(int dim) const {
  if (variables.empty()) throw Error(ErrorCode::domain, "scenario needs at least one conditioning variable");
  if (variables.size() != directions.size()) throw Error(ErrorCode::domain, "scenario directions do not match variables");
  if (target < 0 || target >= dim) throw Error(ErrorCode::domain, "scenario target out of range");
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i] < 0 || variables[i] >= dim || variables[i] == target)
      throw Error(ErrorCode::domain, "scenario variable out of range");
    for (std::size_t j = 0; j < i; ++j)
      if (variables[i] == variables[j]) throw Error(ErrorCode::domain, "scenario repeats a variable");
  }
  if (!(alpha > 0.0 && alpha < 0.5) || !(beta > 0.0 && beta < 0.5))
    throw Error(ErrorCode::domain, "scenario alpha and beta must lie in (0, 0.5)");
}

ScenarioPattern parse_scenario(std::string_view text, int dim, double alpha, double beta) {
  ScenarioPattern p;
  p.alpha = alpha;
  p.beta = beta;
  std::string_view letters = text;
  std::string_view target;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    letters = text.substr(0, slash);
    target = text.substr(slash + 1);
  }
  if (static_cast<int>(letters.size()) > dim - 1)
    throw Error(ErrorCode::config, "scenario '" + std::string(text) + "' has more letters than conditioning variables");
  for (std::size_t k = 0; k < letters.size(); ++k) {
    const char c = letters[k];
    if (c == '.') continue;
    if (c != 'H' && c != 'L') throw Error(ErrorCode::config, "scenario letters must be H, L or '.'");
    p.variables.push_back(static_cast<int>(k) + 1);
    p.directions.push_back(c == 'H' ? Direction::high : Direction::low);
  }
  if (p.variables.empty()) throw Error(ErrorCode::config, "scenario '" + std::string(text) + "' conditions on nothing");
  if (target.empty()) {
    p.target_direction = p.directions.front();
  } else if (target == "H" || target == "L") {
    p.target_direction = target == "H" ? Direction::high : Direction::low;
  } else {
    throw Error(ErrorCode::config, "scenario target direction must be H or L");
  }
  p.validate(dim);
  return p;
}

std::vector<std::string> scenario_labels(int dim) {
  const int n = dim - 1;
  std::vector<std::string> out;
  for (int mask = (1 << n) - 1; mask >= 0; --mask) {
    std::string s;
    for (int k = n - 1; k >= 0; --k) s += (mask >> k) & 1 ? 'H' : 'L';
    out.push_back(s);
  }
  return out;
}

TailMeasureResult scenario_tail_coefficient(const Eigen::Ref<const MatrixXd>& sample, const ScenarioPattern& pattern) {
  pattern.validate(static_cast<int>(sample.cols()));
  // negation reverses the order exactly, which is all the rank-based
  // measures see of the reflection u -> 1 - u
  MatrixXd x(sample.rows(), static_cast<Index>(pattern.variables.size()));
  for (std::size_t k = 0; k < pattern.variables.size(); ++k) {
    const double sign = pattern.directions[k] == Direction::low ? -1.0 : 1.0;
    x.col(static_cast<Index>(k)) = sign * sample.col(pattern.variables[k]);
  }
  const VectorXd y = (pattern.target_direction == Direction::low ? -1.0 : 1.0) * sample.col(pattern.target);
  return q_upper_kendall(x, y, pattern.alpha, pattern.beta);
}

TailMeasureResult scenario_tail_coefficient(const VineModel& model, const ScenarioPattern& pattern, Index n_mc,
                                            std::uint64_t seed) {
  pattern.validate(model.dim());
  return scenario_tail_coefficient(simulate(model, n_mc, seed), pattern);
}

std::vector<ConcentrationPoint> tail_concentration(const Eigen::Ref<const MatrixXd>& pairs, double alpha,
                                                   std::span<const double> beta_grid) {
  if (pairs.cols() != 2) throw Error(ErrorCode::domain, "tail concentration needs an n x 2 sample");
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::domain, "alpha must lie in (0, 0.5)");
  const double denom = alpha * static_cast<double>(pairs.rows());
  std::vector<ConcentrationPoint> out;
  for (double b : beta_grid) {
    Index lo = 0, hi = 0;
    for (Index i = 0; i < pairs.rows(); ++i) {
      const double u = pairs(i, 0), v = pairs(i, 1);
      lo += u <= alpha && v <= b;
      hi += u > 1.0 - alpha && v > 1.0 - b;
    }
    out.push_back({b, static_cast<double>(lo) / denom, static_cast<double>(hi) / denom});
  }
  return out;
}

}  // namespace vinetail
