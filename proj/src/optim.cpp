#include "vinetail/optim.hpp"

#include "vinetail/error.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

namespace vinetail {

Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  if (!std::isfinite(res.value)) throw Error(ErrorCode::optimization, "objective not finite at start point");

  Eigen::VectorXd g = numerical_gradient(f, res.x);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it + 1;
    if (!g.allFinite()) throw Error(ErrorCode::optimization, "non-finite gradient");
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd p = -h_inv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      fresh = true;
      p = -g;
      slope = g.dot(p);
    }
    // first step along a raw gradient direction is capped to unit length
    if (fresh) {
      const double norm = p.lpNorm<Eigen::Infinity>();
      if (norm > 1.0) {
        p /= norm;
        slope /= norm;
      }
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = res.x + step * p;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        h_inv.setIdentity();
        fresh = true;
        continue;
      }
      // no descent possible along the gradient: numerically stationary
      res.converged = true;
      return res;
    }

    const Eigen::VectorXd g_new = numerical_gradient(f, x_new);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double change = res.value - f_new;

    res.x = x_new;
    g = g_new;
    const double f_old = res.value;
    res.value = f_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }

    if (std::abs(change) <= opts.rel_tolerance * std::max(1.0, std::abs(f_old))) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

ScalarMinimum minimize_scalar(const std::function<double(double)>& f, double lo, double hi) {
  std::uintmax_t max_iter = 200;
  auto wrapped = [&](double x) {
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  const auto [x, v] = boost::math::tools::brent_find_minima(wrapped, lo, hi, 40, max_iter);
  return {x, v};
}

double solve_monotone(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) {
    // no sign change: return the closer end
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
  }
  std::uintmax_t max_iter = 200;
  auto stop = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, max_iter);
  return 0.5 * (a + b);
}

}  // namespace vinetail
