#include "vinetail/bicop.hpp"

#include "vinetail/error.hpp"
#include "vinetail/optim.hpp"
#include "vinetail/rng.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vinetail {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUnitEps = 1e-14;
constexpr double kRhoMax = 0.9999;
constexpr double kThetaMax = 50.0;
constexpr double kNuMin = 2.1;
constexpr double kNuMax = 30.0;

double clamp_unit(double x) { return std::clamp(x, kUnitEps, 1.0 - kUnitEps); }

// log(exp(a) + exp(b) - 1) for a, b >= 0.
double log_sum_exp_minus_one(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m) - std::exp(-m));
}

// Gauss-Legendre nodes/weights on [0, 1].
struct Quadrature {
  std::vector<double> x, w;
};

Quadrature gauss_legendre(int n) {
  Quadrature q;
  q.x.resize(static_cast<std::size_t>(n));
  q.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    q.x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    q.x[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + z);
    q.w[static_cast<std::size_t>(i)] = 0.5 * w;
    q.w[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
  }
  return q;
}

// Composite rule on [0, 1] with nodes clustered at both ends through the
// substitution u = s^2 (3 - 2 s).
const Quadrature& unit_rule() {
  static const Quadrature rule = [] {
    const Quadrature base = gauss_legendre(16);
    constexpr int panels = 10;
    Quadrature q;
    for (int p = 0; p < panels; ++p) {
      for (std::size_t k = 0; k < base.x.size(); ++k) {
        const double s = (p + base.x[k]) / panels;
        q.x.push_back(s * s * (3.0 - 2.0 * s));
        q.w.push_back(base.w[k] / panels * 6.0 * s * (1.0 - s));
      }
    }
    return q;
  }();
  return rule;
}

// integral_0^theta t^k / (e^t - 1) dt
double debye_integral(double theta, int k) {
  static const Quadrature q = gauss_legendre(64);
  double sum = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double t = theta * q.x[i];
    const double f = std::abs(t) < 1e-12 ? (k == 1 ? 1.0 : 0.0) : std::pow(t, k) / std::expm1(t);
    sum += q.w[i] * f;
  }
  return sum * theta;
}

void validate(Family f, const VectorXd& p, int rotation) {
  if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270)
    throw Error(ErrorCode::domain, "rotation must be 0, 90, 180 or 270");
  if (p.size() != parameter_count(f))
    throw Error(ErrorCode::domain, std::string(to_string(f)) + " expects " + std::to_string(parameter_count(f)) +
                                       " parameter(s)");
  if (!p.allFinite()) throw Error(ErrorCode::domain, "non-finite copula parameter");
  switch (f) {
    case Family::independence: return;
    case Family::gaussian:
      if (!(std::abs(p[0]) < 1.0)) throw Error(ErrorCode::domain, "gaussian rho must lie in (-1, 1)");
      return;
    case Family::student_t:
      if (!(std::abs(p[0]) < 1.0)) throw Error(ErrorCode::domain, "student t rho must lie in (-1, 1)");
      if (!(p[1] > 2.0)) throw Error(ErrorCode::domain, "student t nu must exceed 2");
      return;
    case Family::clayton:
      if (!(p[0] > 0.0)) throw Error(ErrorCode::domain, "clayton theta must be positive");
      return;
    case Family::gumbel:
      if (!(p[0] >= 1.0)) throw Error(ErrorCode::domain, "gumbel theta must be at least 1");
      return;
    case Family::frank:
      if (p[0] == 0.0) throw Error(ErrorCode::domain, "frank theta must be non-zero");
      return;
  }
}

// ---- unrotated families ---------------------------------------------------
// All base functions assume u, v already clamped into the open unit square.

struct TTerms {
  double rho, nu, log_norm;
};

TTerms t_terms(double rho, double nu) {
  return {rho, nu,
          std::lgamma(0.5 * (nu + 2.0)) + std::lgamma(0.5 * nu) - 2.0 * std::lgamma(0.5 * (nu + 1.0)) -
              0.5 * std::log1p(-rho * rho)};
}

double gaussian_log_pdf_xy(double rho, double x, double y) {
  const double r2 = 1.0 - rho * rho;
  return -0.5 * std::log(r2) - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2);
}

double t_log_pdf_xy(const TTerms& t, double x, double y) {
  const double r2 = 1.0 - t.rho * t.rho;
  const double q = (x * x - 2.0 * t.rho * x * y + y * y) / (t.nu * r2);
  return t.log_norm - 0.5 * (t.nu + 2.0) * std::log1p(q) +
         0.5 * (t.nu + 1.0) * (std::log1p(x * x / t.nu) + std::log1p(y * y / t.nu));
}

double clayton_log_pdf(double th, double u, double v) {
  const double lu = std::log(u), lv = std::log(v);
  const double ls = log_sum_exp_minus_one(-th * lu, -th * lv);
  return std::log1p(th) - (1.0 + th) * (lu + lv) - (1.0 / th + 2.0) * ls;
}

double gumbel_log_a(double th, double x, double y) {
  const double a = th * std::log(x), b = th * std::log(y);
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double gumbel_log_pdf(double th, double u, double v) {
  const double x = -std::log(u), y = -std::log(v);
  const double la = gumbel_log_a(th, x, y);
  const double l = std::exp(la / th);
  return -l + x + y + (th - 1.0) * (std::log(x) + std::log(y)) + (2.0 / th - 2.0) * la + std::log1p((th - 1.0) / l);
}

double frank_log_pdf(double th, double u, double v) {
  if (std::abs(th) < 1e-10) return 0.0;
  const double a = std::expm1(-th * u), b = std::expm1(-th * v), g = std::expm1(-th);
  const double den = g + a * b;
  return std::log(-th * g) - th * (u + v) - 2.0 * std::log(std::abs(den));
}

// Owen's T representation of the standard bivariate normal cdf.
double bivariate_normal_cdf(double x, double y, double rho) {
  if (x == 0.0 && y == 0.0) return 0.25 + std::asin(rho) / (2.0 * kPi);
  const double r = std::sqrt(1.0 - rho * rho);
  auto t_arg = [&](double a, double b) {
    if (a == 0.0) return std::copysign(1e300, b - rho * a);
    return (b - rho * a) / (a * r);
  };
  const double beta = (x * y > 0.0 || (x * y == 0.0 && x + y >= 0.0)) ? 0.0 : 0.5;
  return 0.5 * normal_cdf(x) + 0.5 * normal_cdf(y) - boost::math::owens_t(x, t_arg(x, y)) -
         boost::math::owens_t(y, t_arg(y, x)) - beta;
}

double base_h2(Family f, const VectorXd& p, double u, double v) {
  switch (f) {
    case Family::independence: return u;
    case Family::gaussian: {
      const double rho = p[0];
      return normal_cdf((normal_quantile(u) - rho * normal_quantile(v)) / std::sqrt(1.0 - rho * rho));
    }
    case Family::student_t: {
      const double rho = p[0], nu = p[1];
      const double x = student_t_quantile(u, nu), y = student_t_quantile(v, nu);
      const double scale = std::sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0));
      return student_t_cdf((x - rho * y) / scale, nu + 1.0);
    }
    case Family::clayton: {
      const double th = p[0];
      const double lu = std::log(u), lv = std::log(v);
      const double ls = log_sum_exp_minus_one(-th * lu, -th * lv);
      return std::exp((-th - 1.0) * lv - (1.0 + 1.0 / th) * ls);
    }
    case Family::gumbel: {
      const double th = p[0];
      const double x = -std::log(u), y = -std::log(v);
      const double la = gumbel_log_a(th, x, y);
      return std::exp(-std::exp(la / th) + (1.0 / th - 1.0) * la + (th - 1.0) * std::log(y) + y);
    }
    case Family::frank: {
      const double th = p[0];
      if (std::abs(th) < 1e-10) return u;
      const double a = std::expm1(-th * u), b = std::expm1(-th * v), g = std::expm1(-th);
      return std::exp(-th * v) * a / (g + a * b);
    }
  }
  return u;
}

double base_log_pdf(Family f, const VectorXd& p, double u, double v) {
  switch (f) {
    case Family::independence: return 0.0;
    case Family::gaussian: return gaussian_log_pdf_xy(p[0], normal_quantile(u), normal_quantile(v));
    case Family::student_t:
      return t_log_pdf_xy(t_terms(p[0], p[1]), student_t_quantile(u, p[1]), student_t_quantile(v, p[1]));
    case Family::clayton: return clayton_log_pdf(p[0], u, v);
    case Family::gumbel: return gumbel_log_pdf(p[0], u, v);
    case Family::frank: return frank_log_pdf(p[0], u, v);
  }
  return 0.0;
}

// Safeguarded Newton on u for base_h2(u, v) = q; the density is the
// derivative of the h-function in its free argument.
double numeric_hinv2(Family f, const VectorXd& p, double q, double v) {
  double lo = 0.0, hi = 1.0, u = q;
  for (int it = 0; it < 200; ++it) {
    const double uc = clamp_unit(u);
    const double r = base_h2(f, p, uc, v) - q;
    if (std::abs(r) < 1e-14) return uc;
    if (r > 0.0) hi = uc;
    else lo = uc;
    const double d = std::exp(base_log_pdf(f, p, uc, v));
    double next = uc - r / d;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (hi - lo < 1e-16) return clamp_unit(0.5 * (lo + hi));
    u = next;
  }
  return clamp_unit(u);
}

double base_hinv2(Family f, const VectorXd& p, double q, double v) {
  switch (f) {
    case Family::independence: return q;
    case Family::gaussian: {
      const double rho = p[0];
      return normal_cdf(rho * normal_quantile(v) + std::sqrt(1.0 - rho * rho) * normal_quantile(q));
    }
    case Family::student_t: {
      const double rho = p[0], nu = p[1];
      const double y = student_t_quantile(v, nu);
      const double scale = std::sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0));
      return student_t_cdf(student_t_quantile(q, nu + 1.0) * scale + rho * y, nu);
    }
    case Family::clayton: {
      const double th = p[0];
      const double lv = std::log(v);
      const double big_b = -th * lv;                          // >= 0
      const double d = -th / (1.0 + th) * std::log(q);      // >= 0
      const double lead = big_b + std::log(std::expm1(d));  // log(e^B (e^d - 1))
      const double log_t = lead > 30.0 ? lead + std::log1p(std::exp(-lead)) : std::log1p(std::exp(lead));
      return std::exp(-log_t / th);
    }
    case Family::gumbel: return numeric_hinv2(f, p, q, v);
    case Family::frank: {
      const double th = p[0];
      if (std::abs(th) < 1e-10) return q;
      const double b = std::expm1(-th * v), g = std::expm1(-th);
      const double a = q * g / (1.0 + b * (1.0 - q));
      return -std::log1p(a) / th;
    }
  }
  return q;
}

double base_cdf(Family f, const VectorXd& p, double u, double v) {
  switch (f) {
    case Family::independence: return u * v;
    case Family::gaussian: return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), p[0]);
    case Family::student_t: {
      // C(u, v) = int_{-inf}^{y} P(X <= x | Y = s) f_nu(s) ds
      const double rho = p[0], nu = p[1];
      const double x = student_t_quantile(u, nu), y = student_t_quantile(v, nu);
      const boost::math::students_t_distribution<double> dist(nu), cond(nu + 1.0);
      auto integrand = [&](double s) {
        const double scale = std::sqrt((nu + s * s) * (1.0 - rho * rho) / (nu + 1.0));
        return boost::math::cdf(cond, (x - rho * s) / scale) * boost::math::pdf(dist, s);
      };
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
          integrand, -std::numeric_limits<double>::infinity(), y, 10, 1e-11);
    }
    case Family::clayton: {
      const double th = p[0];
      return std::exp(-log_sum_exp_minus_one(-th * std::log(u), -th * std::log(v)) / th);
    }
    case Family::gumbel: {
      const double th = p[0];
      return std::exp(-std::exp(gumbel_log_a(th, -std::log(u), -std::log(v)) / th));
    }
    case Family::frank: {
      const double th = p[0];
      if (std::abs(th) < 1e-10) return u * v;
      const double a = std::expm1(-th * u), b = std::expm1(-th * v), g = std::expm1(-th);
      return -std::log1p(a * b / g) / th;
    }
  }
  return u * v;
}

// Every supported family is exchangeable, so dC/du(u, v) = dC/dv(v, u).
double base_h1(Family f, const VectorXd& p, double u, double v) { return base_h2(f, p, v, u); }
double base_hinv1(Family f, const VectorXd& p, double q, double u) { return base_hinv2(f, p, q, u); }

// Kendall's tau and Spearman's rho of the unrotated copula.
double base_tau(Family f, const VectorXd& p) {
  switch (f) {
    case Family::independence: return 0.0;
    case Family::gaussian:
    case Family::student_t: return 2.0 / kPi * std::asin(p[0]);
    case Family::clayton: return p[0] / (p[0] + 2.0);
    case Family::gumbel: return 1.0 - 1.0 / p[0];
    case Family::frank: {
      const double th = p[0];
      if (std::abs(th) < 1e-10) return 0.0;
      return 1.0 - 4.0 / th + 4.0 * debye_integral(th, 1) / (th * th);
    }
  }
  return 0.0;
}

double base_spearman(Family f, const VectorXd& p) {
  switch (f) {
    case Family::independence: return 0.0;
    case Family::gaussian: return 6.0 / kPi * std::asin(0.5 * p[0]);
    case Family::frank: {
      const double th = p[0];
      if (std::abs(th) < 1e-10) return 0.0;
      const double d1 = debye_integral(th, 1) / th;
      const double d2 = 2.0 * debye_integral(th, 2) / (th * th);
      return 1.0 - 12.0 / th * (d1 - d2);
    }
    default: break;
  }
  // rho_S = 12 int C - 3 and int_0^1 C(u, v) dv = u - int_0^1 v h2(u, v) dv,
  // hence rho_S = 3 - 12 int int v h2(u, v) du dv.
  const auto& q = unit_rule();
  double acc = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double u = clamp_unit(q.x[i]);
    double inner = 0.0;
    for (std::size_t j = 0; j < q.x.size(); ++j) {
      const double v = clamp_unit(q.x[j]);
      inner += q.w[j] * v * base_h2(f, p, u, v);
    }
    acc += q.w[i] * inner;
  }
  return 3.0 - 12.0 * acc;
}

// ---- rotation plumbing ------------------------------------------------------

struct Rotated {
  double u, v;
};

// Point at which the base density is evaluated for a rotated copula.
Rotated to_base(int rotation, double u, double v) {
  switch (rotation) {
    case 90: return {1.0 - u, v};
    case 180: return {1.0 - u, 1.0 - v};
    case 270: return {u, 1.0 - v};
    default: return {u, v};
  }
}

double parameter_bound_distance(Family f, double x) {
  switch (f) {
    case Family::gaussian:
    case Family::student_t: return kRhoMax - std::abs(x);
    case Family::clayton: return std::min(x - 1e-4, kThetaMax - x);
    case Family::gumbel: return std::min(x - 1.0, kThetaMax - x);
    case Family::frank: return kThetaMax - std::abs(x);
    default: return 1.0;
  }
}

}  // namespace

// ---- public API -------------------------------------------------------------

std::string_view to_string(Family f) {
  switch (f) {
    case Family::independence: return "independence";
    case Family::gaussian: return "gaussian";
    case Family::student_t: return "student_t";
    case Family::clayton: return "clayton";
    case Family::gumbel: return "gumbel";
    case Family::frank: return "frank";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "independence" || name == "indep") return Family::independence;
  if (name == "gaussian" || name == "normal") return Family::gaussian;
  if (name == "student_t" || name == "t") return Family::student_t;
  if (name == "clayton") return Family::clayton;
  if (name == "gumbel") return Family::gumbel;
  if (name == "frank") return Family::frank;
  throw Error(ErrorCode::unsupported, "unknown copula family '" + std::string(name) + "'");
}

int parameter_count(Family f) {
  switch (f) {
    case Family::independence: return 0;
    case Family::student_t: return 2;
    default: return 1;
  }
}

BivariateCopula::BivariateCopula(Family family, VectorXd params, int rotation)
    : family_(family), params_(std::move(params)), rotation_(rotation) {
  validate(family_, params_, rotation_);
}

BivariateCopula BivariateCopula::gaussian(double rho) { return {Family::gaussian, VectorXd::Constant(1, rho)}; }
BivariateCopula BivariateCopula::student_t(double rho, double nu) {
  VectorXd p(2);
  p << rho, nu;
  return {Family::student_t, p};
}
BivariateCopula BivariateCopula::clayton(double theta, int rotation) {
  return {Family::clayton, VectorXd::Constant(1, theta), rotation};
}
BivariateCopula BivariateCopula::gumbel(double theta, int rotation) {
  return {Family::gumbel, VectorXd::Constant(1, theta), rotation};
}
BivariateCopula BivariateCopula::frank(double theta) { return {Family::frank, VectorXd::Constant(1, theta)}; }

std::string BivariateCopula::describe() const {
  std::ostringstream os;
  os << to_string(family_);
  if (params_.size() > 0) {
    os << '(';
    for (Index i = 0; i < params_.size(); ++i) os << (i ? ", " : "") << params_[i];
    os << ')';
  }
  if (rotation_ != 0) os << " rot" << rotation_;
  return os.str();
}

double cdf(const BivariateCopula& c, double u, double v) {
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0) return std::min(v, 1.0);
  if (v >= 1.0) return u;
  const Family f = c.family();
  const auto& p = c.params();
  double r = 0.0;
  switch (c.rotation()) {
    case 90: r = v - base_cdf(f, p, clamp_unit(1.0 - u), v); break;
    case 180: r = u + v - 1.0 + base_cdf(f, p, clamp_unit(1.0 - u), clamp_unit(1.0 - v)); break;
    case 270: r = u - base_cdf(f, p, u, clamp_unit(1.0 - v)); break;
    default: r = base_cdf(f, p, u, v); break;
  }
  return std::clamp(r, std::max(u + v - 1.0, 0.0), std::min(u, v));
}

double log_pdf(const BivariateCopula& c, double u, double v) {
  const auto b = to_base(c.rotation(), u, v);
  return base_log_pdf(c.family(), c.params(), clamp_unit(b.u), clamp_unit(b.v));
}

double pdf(const BivariateCopula& c, double u, double v) { return std::exp(log_pdf(c, u, v)); }

double hfunc2(const BivariateCopula& c, double u, double v) {
  const Family f = c.family();
  const auto& p = c.params();
  u = clamp_unit(u);
  v = clamp_unit(v);
  switch (c.rotation()) {
    case 90: return 1.0 - base_h2(f, p, clamp_unit(1.0 - u), v);
    case 180: return 1.0 - base_h2(f, p, clamp_unit(1.0 - u), clamp_unit(1.0 - v));
    case 270: return base_h2(f, p, u, clamp_unit(1.0 - v));
    default: return base_h2(f, p, u, v);
  }
}

double hfunc1(const BivariateCopula& c, double u, double v) {
  const Family f = c.family();
  const auto& p = c.params();
  u = clamp_unit(u);
  v = clamp_unit(v);
  switch (c.rotation()) {
    case 90: return base_h1(f, p, clamp_unit(1.0 - u), v);
    case 180: return 1.0 - base_h1(f, p, clamp_unit(1.0 - u), clamp_unit(1.0 - v));
    case 270: return 1.0 - base_h1(f, p, u, clamp_unit(1.0 - v));
    default: return base_h1(f, p, u, v);
  }
}

double hinv2(const BivariateCopula& c, double q, double v) {
  const Family f = c.family();
  const auto& p = c.params();
  q = clamp_unit(q);
  v = clamp_unit(v);
  switch (c.rotation()) {
    case 90: return 1.0 - base_hinv2(f, p, clamp_unit(1.0 - q), v);
    case 180: return 1.0 - base_hinv2(f, p, clamp_unit(1.0 - q), clamp_unit(1.0 - v));
    case 270: return base_hinv2(f, p, q, clamp_unit(1.0 - v));
    default: return base_hinv2(f, p, q, v);
  }
}

double hinv1(const BivariateCopula& c, double q, double u) {
  const Family f = c.family();
  const auto& p = c.params();
  q = clamp_unit(q);
  u = clamp_unit(u);
  switch (c.rotation()) {
    case 90: return base_hinv1(f, p, q, clamp_unit(1.0 - u));
    case 180: return 1.0 - base_hinv1(f, p, clamp_unit(1.0 - q), clamp_unit(1.0 - u));
    case 270: return 1.0 - base_hinv1(f, p, clamp_unit(1.0 - q), u);
    default: return base_hinv1(f, p, q, u);
  }
}

namespace {
template <typename Fn>
VectorXd columnwise(const VectorXd& a, const VectorXd& b, Fn fn) {
  if (a.size() != b.size()) throw Error(ErrorCode::domain, "h-function inputs differ in length");
  VectorXd out(a.size());
  for (Index i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}
}  // namespace

VectorXd hfunc1(const BivariateCopula& c, const VectorXd& u, const VectorXd& v) {
  return columnwise(u, v, [&](double a, double b) { return hfunc1(c, a, b); });
}
VectorXd hfunc2(const BivariateCopula& c, const VectorXd& u, const VectorXd& v) {
  return columnwise(u, v, [&](double a, double b) { return hfunc2(c, a, b); });
}
VectorXd hinv1(const BivariateCopula& c, const VectorXd& p, const VectorXd& u) {
  return columnwise(p, u, [&](double a, double b) { return hinv1(c, a, b); });
}
VectorXd hinv2(const BivariateCopula& c, const VectorXd& p, const VectorXd& v) {
  return columnwise(p, v, [&](double a, double b) { return hinv2(c, a, b); });
}

double loglik(const BivariateCopula& c, const Eigen::Ref<const MatrixXd>& pairs) {
  if (c.family() == Family::independence) return 0.0;
  double ll = 0.0;
  for (Index i = 0; i < pairs.rows(); ++i) ll += log_pdf(c, pairs(i, 0), pairs(i, 1));
  return ll;
}

MatrixXd sample(const BivariateCopula& c, Index n, std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::domain, "sample size must be positive");
  Rng rng(seed);
  MatrixXd out(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    const double q = rng.uniform();
    out(i, 0) = u;
    out(i, 1) = clamp_unit(hinv1(c, q, u));
  }
  return out;
}

double tau_of(const BivariateCopula& c) {
  const double t = base_tau(c.family(), c.params());
  return (c.rotation() == 90 || c.rotation() == 270) ? -t : t;
}

double spearman_of(const BivariateCopula& c) {
  const double r = base_spearman(c.family(), c.params());
  return (c.rotation() == 90 || c.rotation() == 270) ? -r : r;
}

namespace {
struct TailPair {
  double lower = 0.0, upper = 0.0;
};

TailPair base_tdc(Family f, const VectorXd& p) {
  switch (f) {
    case Family::student_t: {
      const double rho = p[0], nu = p[1];
      const double l = 2.0 * student_t_cdf(-std::sqrt((nu + 1.0) * (1.0 - rho) / (1.0 + rho)), nu + 1.0);
      return {l, l};
    }
    case Family::clayton: return {std::pow(2.0, -1.0 / p[0]), 0.0};
    case Family::gumbel: return {0.0, 2.0 - std::pow(2.0, 1.0 / p[0])};
    default: return {};
  }
}
}  // namespace

double lower_tdc(const BivariateCopula& c) {
  const auto t = base_tdc(c.family(), c.params());
  switch (c.rotation()) {
    case 0: return t.lower;
    case 180: return t.upper;
    default: return 0.0;  // 90/270 concentrate mass in the off-diagonal corners
  }
}

double upper_tdc(const BivariateCopula& c) {
  const auto t = base_tdc(c.family(), c.params());
  switch (c.rotation()) {
    case 0: return t.upper;
    case 180: return t.lower;
    default: return 0.0;
  }
}

double parameter_from_tau(Family f, double tau) {
  switch (f) {
    case Family::gaussian:
    case Family::student_t: return std::sin(0.5 * kPi * tau);
    case Family::clayton:
      if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorCode::family_infeasible, "clayton needs tau in (0, 1)");
      return 2.0 * tau / (1.0 - tau);
    case Family::gumbel:
      if (!(tau >= 0.0 && tau < 1.0)) throw Error(ErrorCode::family_infeasible, "gumbel needs tau in [0, 1)");
      return 1.0 / (1.0 - tau);
    case Family::frank: {
      if (std::abs(tau) < 1e-9) return tau >= 0.0 ? 1e-6 : -1e-6;
      const double t = std::clamp(tau, base_tau(Family::frank, VectorXd::Constant(1, -kThetaMax)),
                                  base_tau(Family::frank, VectorXd::Constant(1, kThetaMax)));
      return solve_monotone([&](double th) { return base_tau(Family::frank, VectorXd::Constant(1, th)) - t; },
                            t > 0 ? 1e-6 : -kThetaMax, t > 0 ? kThetaMax : -1e-6);
    }
    case Family::independence: break;
  }
  throw Error(ErrorCode::unsupported, "no tau inversion for " + std::string(to_string(f)));
}

double parameter_from_spearman(Family f, double rho_s) {
  switch (f) {
    case Family::gaussian: return 2.0 * std::sin(kPi * rho_s / 6.0);
    case Family::clayton:
    case Family::gumbel:
    case Family::frank: {
      const double lo = f == Family::clayton ? 1e-4 : (f == Family::gumbel ? 1.0 : (rho_s > 0 ? 1e-6 : -kThetaMax));
      const double hi = f == Family::frank && rho_s < 0 ? -1e-6 : kThetaMax;
      return solve_monotone(
          [&](double th) { return base_spearman(f, VectorXd::Constant(1, th)) - rho_s; }, lo, hi, 1e-12);
    }
    default: break;
  }
  throw Error(ErrorCode::unsupported, "no spearman inversion for " + std::string(to_string(f)));
}

// ---- estimation -------------------------------------------------------------

std::vector<Candidate> default_candidates() {
  return {{Family::independence, 0}, {Family::gaussian, 0}, {Family::student_t, 0}, {Family::clayton, 0},
          {Family::clayton, 90},     {Family::clayton, 180}, {Family::clayton, 270},  {Family::gumbel, 0},
          {Family::gumbel, 90},      {Family::gumbel, 180},  {Family::gumbel, 270},   {Family::frank, 0}};
}

std::vector<Candidate> parse_candidates(std::string_view list) {
  std::vector<Candidate> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto pos = list.find(',', start);
    const auto item = list.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (!item.empty()) {
      const Family f = parse_family(item);
      if (f == Family::clayton || f == Family::gumbel) {
        for (int r : {0, 90, 180, 270}) out.push_back({f, r});
      } else {
        out.push_back({f, 0});
      }
    }
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw Error(ErrorCode::config, "empty candidate family list");
  return out;
}

namespace {

// Brent search in a transformed coordinate: first on a bracket around the
// starting point, widened to the full range when the optimum sits on the
// bracket edge.
ScalarMinimum bracketed_minimum(const std::function<double(double)>& f, double start, double lo, double hi,
                                double half_width) {
  const double a = std::max(lo, start - half_width), b = std::min(hi, start + half_width);
  auto m = minimize_scalar(f, a, b);
  const double edge = 1e-6 * (b - a);
  if ((m.x - a < edge && a > lo) || (b - m.x < edge && b < hi)) m = minimize_scalar(f, lo, hi);
  return m;
}

}  // namespace

FitResult fit_mle(const Eigen::Ref<const MatrixXd>& pairs, Family family, int rotation) {
  if (pairs.cols() != 2) throw Error(ErrorCode::domain, "fit_mle expects an n x 2 matrix");
  if (pairs.rows() < 30) throw Error(ErrorCode::domain, "fit_mle needs at least 30 pairs");
  if ((pairs.array() <= 0.0).any() || (pairs.array() >= 1.0).any())
    throw Error(ErrorCode::domain, "pseudo-observations must lie in (0, 1)");
  if (rotation != 0 && rotation != 90 && rotation != 180 && rotation != 270)
    throw Error(ErrorCode::domain, "rotation must be 0, 90, 180 or 270");

  const Index n = pairs.rows();
  FitResult res;
  res.n_obs = n;
  if (family == Family::independence) {
    res.copula = BivariateCopula::independence();
    return res;
  }

  // move the data into the unrotated family's frame
  VectorXd u(n), v(n);
  for (Index i = 0; i < n; ++i) {
    const auto b = to_base(rotation, pairs(i, 0), pairs(i, 1));
    u[i] = clamp_unit(b.u);
    v[i] = clamp_unit(b.v);
  }
  const double tau = kendall_tau(u, v);

  VectorXd best;
  double best_negll = std::numeric_limits<double>::infinity();

  switch (family) {
    case Family::gaussian: {
      double sq = 0.0, cross = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double x = normal_quantile(u[i]), y = normal_quantile(v[i]);
        sq += x * x + y * y;
        cross += x * y;
      }
      const double dn = static_cast<double>(n);
      auto negll = [&](double z) {
        const double rho = std::tanh(z);
        const double r2 = 1.0 - rho * rho;
        return 0.5 * dn * std::log(r2) + (rho * rho * sq - 2.0 * rho * cross) / (2.0 * r2);
      };
      const double zmax = std::atanh(kRhoMax);
      const double z0 = std::atanh(std::clamp(parameter_from_tau(family, tau), -kRhoMax, kRhoMax));
      const auto m = bracketed_minimum(negll, z0, -zmax, zmax, 0.5);
      best = VectorXd::Constant(1, std::tanh(m.x));
      best_negll = m.value;
      break;
    }
    case Family::student_t: {
      const double zmax = std::atanh(kRhoMax);
      const double z0 = std::atanh(std::clamp(parameter_from_tau(family, tau), -kRhoMax, kRhoMax));
      VectorXd x(n), y(n);
      double profile_rho = std::tanh(z0);
      auto profile = [&](double s) {
        const double nu = std::exp(s);
        for (Index i = 0; i < n; ++i) {
          x[i] = student_t_quantile(u[i], nu);
          y[i] = student_t_quantile(v[i], nu);
        }
        auto negll = [&](double z) {
          const TTerms t = t_terms(std::tanh(z), nu);
          double ll = 0.0;
          for (Index i = 0; i < n; ++i) ll += t_log_pdf_xy(t, x[i], y[i]);
          return -ll;
        };
        const auto m = bracketed_minimum(negll, z0, -zmax, zmax, 0.3);
        profile_rho = std::tanh(m.x);
        if (m.value < best_negll) {
          best_negll = m.value;
          best = VectorXd(2);
          best << profile_rho, nu;
        }
        return m.value;
      };
      // coarse log grid over nu, then Brent between the neighbours of the best node
      constexpr int nodes = 8;
      const double s_lo = std::log(kNuMin), s_hi = std::log(kNuMax);
      const double step = (s_hi - s_lo) / (nodes - 1);
      int best_node = 0;
      double best_value = std::numeric_limits<double>::infinity();
      for (int k = 0; k < nodes; ++k) {
        const double value = profile(s_lo + k * step);
        if (value < best_value) {
          best_value = value;
          best_node = k;
        }
      }
      minimize_scalar(profile, s_lo + std::max(best_node - 1, 0) * step,
                      s_lo + std::min(best_node + 1, nodes - 1) * step);
      break;
    }
    case Family::clayton:
    case Family::gumbel: {
      const double theta0 = parameter_from_tau(family, std::min(tau, 0.98));
      const double lo = family == Family::clayton ? 1e-4 : 1.0;
      auto theta_of = [&](double z) { return lo + std::exp(z); };
      auto negll = [&](double z) {
        const double th = theta_of(z);
        double ll = 0.0;
        for (Index i = 0; i < n; ++i)
          ll += family == Family::clayton ? clayton_log_pdf(th, u[i], v[i]) : gumbel_log_pdf(th, u[i], v[i]);
        return -ll;
      };
      const double zlo = std::log(1e-8), zhi = std::log(kThetaMax - lo);
      const double z0 = std::clamp(std::log(std::max(theta0 - lo, 1e-8)), zlo, zhi);
      const auto m = bracketed_minimum(negll, z0, zlo, zhi, 1.0);
      best = VectorXd::Constant(1, theta_of(m.x));
      best_negll = m.value;
      break;
    }
    case Family::frank: {
      auto negll = [&](double th) {
        if (std::abs(th) < 1e-10) return 0.0;
        double ll = 0.0;
        for (Index i = 0; i < n; ++i) ll += frank_log_pdf(th, u[i], v[i]);
        return -ll;
      };
      const double th0 = parameter_from_tau(family, tau);
      const auto m = bracketed_minimum(negll, th0, -kThetaMax, kThetaMax, std::max(2.0, std::abs(th0)));
      double th = m.x;
      if (std::abs(th) < 1e-6) th = th < 0 ? -1e-6 : 1e-6;
      best = VectorXd::Constant(1, th);
      best_negll = negll(th);
      break;
    }
    case Family::independence: break;
  }

  if (!std::isfinite(best_negll) || best.size() == 0)
    throw Error(ErrorCode::optimization, "copula likelihood did not converge for " + std::string(to_string(family)));

  res.copula = BivariateCopula(family, best, rotation);
  res.loglik = -best_negll;
  res.aic = 2.0 * parameter_count(family) - 2.0 * res.loglik;
  res.at_boundary = parameter_bound_distance(family, best[0]) < 1e-4 ||
                    (family == Family::student_t && (best[1] < kNuMin + 1e-3 || best[1] > kNuMax - 1e-3));
  if (res.at_boundary) res.notes.push_back("parameter at search boundary");
  return res;
}

FitResult select_family_aic(const Eigen::Ref<const MatrixXd>& pairs, std::span<const Candidate> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::domain, "empty candidate set");
  std::vector<Candidate> order(candidates.begin(), candidates.end());
  std::stable_sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    if (a.family != b.family) return a.family < b.family;
    return parameter_count(a.family) < parameter_count(b.family);
  });

  std::vector<std::string> skipped;
  FitResult best;
  bool have = false;
  for (const auto& cand : order) {
    try {
      FitResult r = fit_mle(pairs, cand.family, cand.rotation);
      if (!have || r.aic < best.aic) {
        best = std::move(r);
        have = true;
      }
    } catch (const Error& e) {
      std::ostringstream os;
      os << "skipped " << to_string(cand.family) << " rot" << cand.rotation << ": " << e.what();
      skipped.push_back(os.str());
    }
  }
  if (!have) throw Error(ErrorCode::selection, "no candidate family could be fitted");
  best.notes.insert(best.notes.end(), skipped.begin(), skipped.end());
  return best;
}

}  // namespace vinetail
