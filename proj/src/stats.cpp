#include "vinetail/stats.hpp"

#include "vinetail/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vinetail {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

std::vector<Index> sorted_order(const Eigen::Ref<const VectorXd>& x) {
  std::vector<Index> idx(static_cast<std::size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return x[a] < x[b]; });
  return idx;
}

std::int64_t tie_pairs(const std::vector<double>& sorted) {
  std::int64_t total = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const auto t = static_cast<std::int64_t>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

// Sorts v ascending and returns the number of strict inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_pdf(double x) { return 0.39894228040143267794 * std::exp(-0.5 * x * x); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::domain, "normal_quantile: p outside (0,1)");
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double student_t_cdf(double x, double nu) {
  return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
}

double student_t_quantile(double p, double nu) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(nu), p);
}

VectorXd average_ranks(const Eigen::Ref<const VectorXd>& x) {
  const auto idx = sorted_order(x);
  VectorXd r(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
    i = j;
  }
  return r;
}

std::vector<Index> ordinal_ranks(const Eigen::Ref<const VectorXd>& x) {
  const auto idx = sorted_order(x);
  std::vector<Index> r(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) r[static_cast<std::size_t>(idx[k])] = static_cast<Index>(k + 1);
  return r;
}

std::vector<int> dense_ranks(const Eigen::Ref<const VectorXd>& x) {
  const auto idx = sorted_order(x);
  std::vector<int> r(idx.size());
  int rank = -1;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k == 0 || x[idx[k]] != x[idx[k - 1]]) ++rank;
    r[static_cast<std::size_t>(idx[k])] = rank;
  }
  return r;
}

double kendall_tau(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::domain, "kendall_tau: length mismatch");
  const auto n = static_cast<std::size_t>(x.size());
  if (n < 2) return 0.0;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    xs[k] = x[idx[k]];
    ys[k] = y[idx[k]];
  }

  const std::int64_t n1 = tie_pairs(xs);
  std::int64_t n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
      const auto t = static_cast<std::int64_t>(j - i);
      n3 += t * (t - 1) / 2;
      i = j;
    }
  }
  std::vector<double> buf(n);
  const std::int64_t swaps = count_inversions(ys, buf, 0, n);
  const std::int64_t n2 = tie_pairs(ys);
  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;

  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps) / denom;
}

double pearson(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
  const VectorXd xc = x.array() - x.mean();
  const VectorXd yc = y.array() - y.mean();
  const double denom = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
  return denom > 0.0 ? xc.dot(yc) / denom : 0.0;
}

double spearman(const Eigen::Ref<const VectorXd>& x, const Eigen::Ref<const VectorXd>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

MatrixXd pseudo_observations(const Eigen::Ref<const MatrixXd>& data) {
  MatrixXd u(data.rows(), data.cols());
  const double scale = 1.0 / static_cast<double>(data.rows() + 1);
  for (Index j = 0; j < data.cols(); ++j) u.col(j) = average_ranks(data.col(j)) * scale;
  return u;
}

double sample_variance(const Eigen::Ref<const VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  return (x.array() - x.mean()).square().sum() / static_cast<double>(x.size() - 1);
}

double sample_kurtosis(const Eigen::Ref<const VectorXd>& x) {
  const Eigen::ArrayXd c = x.array() - x.mean();
  const double m2 = c.square().mean();
  const double m4 = c.square().square().mean();
  return m4 / (m2 * m2);
}

double ljung_box(const Eigen::Ref<const VectorXd>& x, int lags) {
  const Eigen::ArrayXd c = x.array() - x.mean();
  const auto n = static_cast<double>(x.size());
  const double c0 = c.square().sum();
  double q = 0.0;
  for (int k = 1; k <= lags; ++k) {
    const Index len = x.size() - k;
    const double ck = (c.head(len) * c.tail(len)).sum();
    const double rho = ck / c0;
    q += rho * rho / (n - k);
  }
  return n * (n + 2.0) * q;
}

double chi_squared_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

LinearFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  if (x.empty()) return {};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return {my, 0.0};
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

double spearman_stderr(double rho, double n) {
  if (n <= 3.0) return 1.0;
  return (1.0 - rho * rho) * std::sqrt((1.0 + 0.5 * rho * rho) / (n - 3.0));
}

}  // namespace vinetail
