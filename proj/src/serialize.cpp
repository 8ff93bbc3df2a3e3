#include "vinetail/serialize.hpp"

#include "vinetail/error.hpp"

#include <cmath>

namespace vinetail {

namespace {

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

VectorXd vector_from(const Json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].is_null() ? NAN : j[i].get<double>();
  return v;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::schema, std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

void to_json(Json& j, const BivariateCopula& c) {
  j = Json{{"family", to_string(c.family())}, {"rotation", c.rotation()}, {"params", vector_json(c.params())}};
}

void from_json(const Json& j, BivariateCopula& c) {
  c = BivariateCopula(parse_family(field(j, "family").get<std::string>()), vector_from(field(j, "params")),
                      field(j, "rotation").get<int>());
}

void to_json(Json& j, const MarginalSpec& s) {
  j = Json{{"lags", s.lags}, {"n_dummies", s.n_dummies}, {"innovation", "gaussian"}};
}

void from_json(const Json& j, MarginalSpec& s) {
  s.lags = field(j, "lags").get<std::vector<int>>();
  s.n_dummies = field(j, "n_dummies").get<int>();
  if (field(j, "innovation").get<std::string>() != "gaussian")
    throw Error(ErrorCode::unsupported, "only gaussian innovations are supported");
  s.validate();
}

void to_json(Json& j, const ArGarchParams& p) {
  j = Json{{"phi", vector_json(p.phi)},
           {"psi", vector_json(p.psi)},
           {"omega", p.omega},
           {"alpha", p.alpha},
           {"beta", p.beta}};
}

void from_json(const Json& j, ArGarchParams& p) {
  p.phi = vector_from(field(j, "phi"));
  p.psi = vector_from(field(j, "psi"));
  p.omega = field(j, "omega").get<double>();
  p.alpha = field(j, "alpha").get<double>();
  p.beta = field(j, "beta").get<double>();
}

Json marginal_json(const MarginalFit& fit, bool with_series) {
  Json j{{"spec", fit.spec},
         {"params", fit.params},
         {"diagnostics",
          {{"loglik", fit.loglik},
           {"converged", fit.converged},
           {"iterations", fit.iterations},
           {"n_obs", fit.residuals.size()},
           {"pit", to_string(fit.pit_mode)},
           {"warnings", fit.warnings}}}};
  if (with_series) {
    j["series"] = {{"sigma2", vector_json(fit.sigma2)},
                   {"residuals", vector_json(fit.residuals)},
                   {"pseudo_obs", vector_json(fit.pseudo_obs)}};
  }
  return j;
}

void to_json(Json& j, const VineEdge& e) {
  j = Json{{"a", e.a}, {"b", e.b}, {"given", e.given}, {"label", e.label()}};
  if (e.left >= 0) {
    j["left"] = e.left;
    j["right"] = e.right;
  }
}

void to_json(Json& j, const VineStructure& s) {
  j = Json{{"dim", s.dim()}, {"trees", s.trees()}};
}

VineStructure structure_from_json(const Json& j) {
  const int dim = field(j, "dim").get<int>();
  const Json& trees = field(j, "trees");
  if (trees.empty()) throw Error(ErrorCode::schema, "vine has no trees");
  std::vector<std::pair<int, int>> first;
  for (const auto& e : trees[0]) first.emplace_back(field(e, "a").get<int>(), field(e, "b").get<int>());
  std::vector<std::vector<std::pair<int, int>>> deeper;
  for (std::size_t t = 1; t < trees.size(); ++t) {
    auto& level = deeper.emplace_back();
    for (const auto& e : trees[t]) level.emplace_back(field(e, "left").get<int>(), field(e, "right").get<int>());
  }
  auto s = VineStructure::from_parents(dim, first, deeper);
  for (std::size_t t = 0; t < trees.size(); ++t) {
    for (std::size_t k = 0; k < trees[t].size(); ++k) {
      const auto& e = s.trees()[t][k];
      const auto& src = trees[t][k];
      if (e.a != src.at("a").get<int>() || e.b != src.at("b").get<int>() ||
          e.given != src.at("given").get<std::vector<int>>())
        throw Error(ErrorCode::schema, "edge " + src.at("label").get<std::string>() + " does not follow from its parents");
    }
  }
  return s;
}

void to_json(Json& j, const VineModel& m) {
  Json trees = Json::array();
  const auto& st = m.structure.trees();
  for (std::size_t t = 0; t < st.size(); ++t) {
    Json level = Json::array();
    for (std::size_t k = 0; k < st[t].size(); ++k) {
      Json e = st[t][k];
      const auto& fit = m.edges[t][k];
      e["copula"] = fit.copula;
      e["loglik"] = fit.loglik;
      e["aic"] = fit.aic;
      e["notes"] = fit.notes;
      level.push_back(std::move(e));
    }
    trees.push_back(std::move(level));
  }
  j = Json{{"dim", m.dim()}, {"n_obs", m.n_obs}, {"loglik", m.loglik()}, {"aic", m.aic()}, {"trees", std::move(trees)}};
}

void from_json(const Json& j, VineModel& m) {
  m.structure = structure_from_json(j);
  m.n_obs = j.value("n_obs", Index{0});
  m.edges.clear();
  for (const auto& level : j.at("trees")) {
    auto& out = m.edges.emplace_back();
    for (const auto& e : level) {
      EdgeFit f;
      f.copula = field(e, "copula").get<BivariateCopula>();
      f.loglik = e.value("loglik", 0.0);
      f.aic = e.value("aic", 0.0);
      f.notes = e.value("notes", std::vector<std::string>{});
      out.push_back(std::move(f));
    }
  }
}

void to_json(Json& j, const TailMeasureResult& r) {
  j = Json{{"value", r.value},
           {"ratio_vs_independence", r.ratio_vs_independence},
           {"ratio_remark", r.ratio_remark},
           {"alpha", r.alpha},
           {"beta", r.beta},
           {"std_error", r.std_error},
           {"threshold", r.threshold},
           {"n_cond", r.n_cond},
           {"n_joint", r.n_joint},
           {"reliable", r.reliable}};
}

void to_json(Json& j, const LambdaEstimate& e) {
  j = Json{{"sequence", e.sequence},
           {"intercept", e.intercept},
           {"slope", e.slope},
           {"smallest_reliable_alpha", e.smallest_reliable_alpha},
           {"smallest_reliable_value", e.smallest_reliable_value},
           {"reliable_points", e.reliable_points}};
}

void to_json(Json& j, const PairTail& t) {
  Json pts = Json::array();
  for (const auto& p : t.points)
    pts.push_back({{"t", p.t},
                   {"lower", p.lower},
                   {"lower_stderr", p.lower_stderr},
                   {"upper", p.upper},
                   {"upper_stderr", p.upper_stderr}});
  j = Json{{"points", std::move(pts)}, {"lower_limit", t.lower_limit}, {"upper_limit", t.upper_limit}};
}

}  // namespace vinetail
