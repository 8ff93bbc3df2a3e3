#pragma once

// Brute-force references shared by the unit and acceptance tests.

#include "vinetail/rng.hpp"
#include "vinetail/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using vinetail::Index;
using vinetail::MatrixXd;
using vinetail::VectorXd;

// #{j : x_j < x_i componentwise} / m, O(m^2).
inline std::vector<double> strict_pit(const MatrixXd& x) {
  const Index m = x.rows();
  std::vector<double> w(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    Index c = 0;
    for (Index j = 0; j < m; ++j) {
      bool below = true;
      for (Index k = 0; k < x.cols() && below; ++k) below = x(j, k) < x(i, k);
      c += below;
    }
    w[static_cast<std::size_t>(i)] = static_cast<double>(c) / static_cast<double>(m);
  }
  return w;
}

// Smallest sample value v with #(values <= v) >= p * m.
inline double generalized_inverse(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double m = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto le = static_cast<double>(std::upper_bound(values.begin(), values.end(), values[i]) - values.begin());
    if (le >= p * m - 1e-9) return values[i];
  }
  return values.back();
}

struct Conditional {
  Index joint = 0;
  Index cond = 0;
  double value() const { return static_cast<double>(joint) / static_cast<double>(cond); }
};

// P(Y <= y_beta | W <= t_alpha) by direct enumeration.
inline Conditional lower_kendall(const MatrixXd& x, const VectorXd& y, double alpha, double beta) {
  const auto w = strict_pit(x);
  const double t = generalized_inverse(w, alpha);
  const double yb = generalized_inverse(std::vector<double>(y.data(), y.data() + y.size()), beta);
  Conditional c;
  for (Index i = 0; i < y.size(); ++i) {
    if (w[static_cast<std::size_t>(i)] > t) continue;
    ++c.cond;
    c.joint += y[i] <= yb;
  }
  return c;
}

// Largest sample value v with #(values >= v) >= p * m.
inline double upper_inverse(std::vector<double> values, double p) {
  for (auto& v : values) v = -v;
  return -generalized_inverse(std::move(values), p);
}

// P(Y >= y_{1-beta} | W >= t_{1-alpha}) by direct enumeration.
inline Conditional upper_kendall(const MatrixXd& x, const VectorXd& y, double alpha, double beta) {
  const auto w = strict_pit(x);
  const double t = upper_inverse(w, alpha);
  const double yb = upper_inverse(std::vector<double>(y.data(), y.data() + y.size()), beta);
  Conditional c;
  for (Index i = 0; i < y.size(); ++i) {
    if (w[static_cast<std::size_t>(i)] < t) continue;
    ++c.cond;
    c.joint += y[i] >= yb;
  }
  return c;
}

// Integer-valued sample with many ties in every column.
inline MatrixXd tied_sample(Index m, Index cols, int levels, std::uint64_t seed) {
  vinetail::Rng rng(seed);
  MatrixXd x(m, cols);
  for (Index i = 0; i < m; ++i)
    for (Index k = 0; k < cols; ++k) x(i, k) = std::floor(rng.uniform() * levels);
  return x;
}

}  // namespace oracle
