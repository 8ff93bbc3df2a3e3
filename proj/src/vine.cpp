#include "vinetail/vine.hpp"

#include "vinetail/data.hpp"
#include "vinetail/error.hpp"
#include "vinetail/rng.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace vinetail {

namespace {

constexpr int kMaxDim = 4;

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    auto at = [this](int i) -> int& { return parent[static_cast<std::size_t>(i)]; };
    while (at(x) != x) x = at(x) = at(at(x));
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

bool is_spanning_tree(int nodes, const std::vector<std::pair<int, int>>& links) {
  if (static_cast<int>(links.size()) != nodes - 1) return false;
  UnionFind uf(nodes);
  for (auto [p, q] : links)
    if (p < 0 || q < 0 || p >= nodes || q >= nodes || !uf.unite(p, q)) return false;
  return true;
}

void check_pseudo_obs(const Eigen::Ref<const MatrixXd>& u, Index min_rows) {
  if (u.cols() < 2 || u.cols() > kMaxDim)
    throw Error(ErrorCode::domain, "vines support 2 to 4 variables, got " + std::to_string(u.cols()));
  if (u.rows() < min_rows)
    throw Error(ErrorCode::domain, "need at least " + std::to_string(min_rows) + " observations, got " +
                                       std::to_string(u.rows()));
  if (!((u.array() > 0.0).all() && (u.array() < 1.0).all()))
    throw Error(ErrorCode::domain, "pseudo-observations must lie in (0, 1)");
  for (Index c = 0; c < u.cols(); ++c)
    if (u.col(c).maxCoeff() == u.col(c).minCoeff())
      throw Error(ErrorCode::degenerate, "column " + std::to_string(c) + " is constant");
}

// Conditioned-variable values flowing out of an edge.
struct EdgeFlow {
  VectorXd in_a, in_b;    // u_{a|S}, u_{b|S}
  VectorXd out_a, out_b;  // u_{a|S+b}, u_{b|S+a}
};

const VectorXd& output_for(const VineEdge& e, const EdgeFlow& f, int var) { return var == e.a ? f.out_a : f.out_b; }

// Inputs of `e` taken from the data (tree 0) or from the parents' outputs.
void fill_inputs(const VineEdge& e, const Eigen::Ref<const MatrixXd>& data, const std::vector<VineEdge>* prev_edges,
                 const std::vector<EdgeFlow>* prev_flow, EdgeFlow& flow) {
  if (e.left < 0) {
    flow.in_a = data.col(e.a);
    flow.in_b = data.col(e.b);
    return;
  }
  const auto& l = (*prev_edges)[static_cast<std::size_t>(e.left)];
  const auto& r = (*prev_edges)[static_cast<std::size_t>(e.right)];
  const auto& lf = (*prev_flow)[static_cast<std::size_t>(e.left)];
  const auto& rf = (*prev_flow)[static_cast<std::size_t>(e.right)];
  const unsigned lm = l.mask();
  const bool a_from_left = (lm >> e.a) & 1u && !std::binary_search(e.given.begin(), e.given.end(), e.a);
  flow.in_a = a_from_left ? output_for(l, lf, e.a) : output_for(r, rf, e.a);
  flow.in_b = a_from_left ? output_for(r, rf, e.b) : output_for(l, lf, e.b);
}

void fill_outputs(const BivariateCopula& c, EdgeFlow& flow) {
  flow.out_a = hfunc2(c, flow.in_a, flow.in_b);
  flow.out_b = hfunc1(c, flow.in_a, flow.in_b);
}

MatrixXd pairs_of(const EdgeFlow& f) {
  MatrixXd p(f.in_a.size(), 2);
  p.col(0) = f.in_a;
  p.col(1) = f.in_b;
  return p;
}

EdgeFit fit_edge(const EdgeFlow& flow, std::span<const Candidate> candidates) {
  EdgeFit out;
  try {
    auto r = select_family_aic(pairs_of(flow), candidates);
    out.copula = r.copula;
    out.loglik = r.loglik;
    out.aic = r.aic;
    out.notes = std::move(r.notes);
  } catch (const Error& e) {
    out.copula = BivariateCopula::independence();
    out.notes.push_back(std::string("fell back to independence: ") + e.what());
  }
  return out;
}

// Shared driver for selection and fitting. With `fixed` the structure is
// given; otherwise each tree is chosen by maximum |tau| spanning tree.
VineModel build(const Eigen::Ref<const MatrixXd>& data, std::span<const Candidate> candidates,
                const VineStructure* fixed) {
  const int dim = static_cast<int>(data.cols());
  std::vector<std::vector<VineEdge>> trees;
  std::vector<std::vector<EdgeFit>> fits;
  std::vector<EdgeFlow> prev_flow;

  for (int level = 0; level < dim - 1; ++level) {
    std::vector<VineEdge> edges;
    std::vector<EdgeFlow> flows;
    const std::vector<VineEdge>* prev = level > 0 ? &trees.back() : nullptr;

    if (fixed) {
      edges = fixed->trees()[static_cast<std::size_t>(level)];
      for (const auto& e : edges) {
        EdgeFlow f;
        fill_inputs(e, data, prev, &prev_flow, f);
        flows.push_back(std::move(f));
      }
    } else {
      const int nodes = level == 0 ? dim : static_cast<int>(prev->size());
      struct Cand {
        double weight;
        int p, q;
        VineEdge edge;
        EdgeFlow flow;
      };
      std::vector<Cand> cands;
      for (int p = 0; p < nodes; ++p) {
        for (int q = p + 1; q < nodes; ++q) {
          VineEdge e;
          if (level == 0) {
            e.a = p;
            e.b = q;
          } else {
            try {
              e = join_edges((*prev)[static_cast<std::size_t>(p)], (*prev)[static_cast<std::size_t>(q)], p, q);
            } catch (const Error&) {
              continue;
            }
          }
          EdgeFlow f;
          fill_inputs(e, data, prev, &prev_flow, f);
          const double w = std::abs(kendall_tau(f.in_a, f.in_b));
          cands.push_back({std::isfinite(w) ? w : 0.0, p, q, std::move(e), std::move(f)});
        }
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.weight != y.weight) return x.weight > y.weight;
        return std::tie(x.p, x.q) < std::tie(y.p, y.q);
      });
      UnionFind uf(nodes);
      std::vector<std::pair<std::pair<int, int>, std::size_t>> chosen;
      for (std::size_t k = 0; k < cands.size(); ++k)
        if (uf.unite(cands[k].p, cands[k].q)) chosen.push_back({{cands[k].p, cands[k].q}, k});
      // stable edge order inside a tree: by node pair
      std::sort(chosen.begin(), chosen.end());
      for (const auto& [pq, k] : chosen) {
        edges.push_back(std::move(cands[k].edge));
        flows.push_back(std::move(cands[k].flow));
      }
    }

    std::vector<EdgeFit> level_fits;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      level_fits.push_back(fit_edge(flows[k], candidates));
      fill_outputs(level_fits.back().copula, flows[k]);
    }
    trees.push_back(std::move(edges));
    fits.push_back(std::move(level_fits));
    prev_flow = std::move(flows);
  }

  VineModel model;
  model.structure = fixed ? *fixed : VineStructure(dim, std::move(trees));
  model.edges = std::move(fits);
  model.n_obs = data.rows();
  return model;
}

template <typename Fn>
void propagate(const VineModel& model, const Eigen::Ref<const MatrixXd>& data, Fn on_edge) {
  const auto& trees = model.structure.trees();
  std::vector<EdgeFlow> prev_flow;
  for (std::size_t level = 0; level < trees.size(); ++level) {
    std::vector<EdgeFlow> flows(trees[level].size());
    for (std::size_t k = 0; k < trees[level].size(); ++k) {
      fill_inputs(trees[level][k], data, level > 0 ? &trees[level - 1] : nullptr, &prev_flow, flows[k]);
      const auto& c = model.edges[level][k].copula;
      on_edge(level, k, c, flows[k]);
      if (level + 1 < trees.size()) fill_outputs(c, flows[k]);
    }
    prev_flow = std::move(flows);
  }
}

// Sampling plan: variable order plus, for each variable after the first,
// the chain of edges (x, w_k | S_k) with S_{k+1} = S_k + w_k.
struct ChainLink {
  int level, index;
  int partner;
};
struct SamplingPlan {
  std::vector<int> order;
  std::vector<std::vector<ChainLink>> chains;
};

bool chain_for(const VineStructure& s, int x, unsigned prefix, std::vector<ChainLink>& chain) {
  const int need = std::popcount(prefix);
  chain.assign(static_cast<std::size_t>(need), ChainLink{-1, -1, -1});
  const unsigned allowed = prefix | (1u << x);
  for (std::size_t level = 0; level < s.trees().size(); ++level) {
    for (std::size_t k = 0; k < s.trees()[level].size(); ++k) {
      const auto& e = s.trees()[level][k];
      if (e.a != x && e.b != x) continue;
      if ((e.mask() & ~allowed) != 0u) continue;
      if (static_cast<int>(level) >= need || chain[level].level >= 0) return false;
      chain[level] = {static_cast<int>(level), static_cast<int>(k), e.a == x ? e.b : e.a};
    }
  }
  for (int k = 0; k < need; ++k) {
    if (chain[static_cast<std::size_t>(k)].level < 0) return false;
    if (k > 0) {
      const auto& lo = s.trees()[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(chain[static_cast<std::size_t>(k - 1)].index)];
      const auto& hi = s.trees()[static_cast<std::size_t>(k)][static_cast<std::size_t>(chain[static_cast<std::size_t>(k)].index)];
      if ((lo.mask() & ~hi.mask()) != 0u) return false;
    }
  }
  return true;
}

SamplingPlan plan_sampling(const VineStructure& s) {
  std::vector<int> perm(static_cast<std::size_t>(s.dim()));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    SamplingPlan plan;
    plan.order = perm;
    plan.chains.resize(perm.size());
    unsigned prefix = 0;
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) {
      ok = chain_for(s, perm[i], prefix, plan.chains[i]);
      prefix |= 1u << perm[i];
    }
    if (ok) return plan;
  } while (std::next_permutation(perm.begin(), perm.end()));
  throw Error(ErrorCode::numerical, "no sampling order for vine structure");
}

// u_{var | given} for already sampled variables, memoised per conditioning mask.
class ConditionalCache {
 public:
  ConditionalCache(const VineModel& m, const MatrixXd& sampled) : model_(m), sampled_(sampled) {}

  void store(int var, unsigned given, VectorXd values) { memo_[{var, given}] = std::move(values); }

  const VectorXd& get(int var, unsigned given) {
    const auto key = std::make_pair(var, given);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (given == 0u) return memo_[key] = sampled_.col(var);
    const unsigned full = given | (1u << var);
    const auto& trees = model_.structure.trees();
    const std::size_t level = static_cast<std::size_t>(std::popcount(given) - 1);
    for (std::size_t k = 0; k < trees[level].size(); ++k) {
      const auto& e = trees[level][k];
      if (e.mask() != full || (e.a != var && e.b != var)) continue;
      unsigned g = 0;
      for (int v : e.given) g |= 1u << v;
      const VectorXd ua = get(e.a, g);
      const VectorXd ub = get(e.b, g);
      const auto& c = model_.edges[level][k].copula;
      return memo_[key] = var == e.a ? hfunc2(c, ua, ub) : hfunc1(c, ua, ub);
    }
    throw Error(ErrorCode::numerical, "conditional value not available in vine");
  }

 private:
  const VineModel& model_;
  const MatrixXd& sampled_;
  std::map<std::pair<int, unsigned>, VectorXd> memo_;
};

unsigned mask_of(const std::vector<int>& vars) {
  unsigned m = 0;
  for (int v : vars) m |= 1u << v;
  return m;
}

}  // namespace

// ---- structure --------------------------------------------------------------

unsigned VineEdge::mask() const { return mask_of(given) | (1u << a) | (1u << b); }

std::string VineEdge::label() const {
  std::ostringstream os;
  os << a << ',' << b;
  if (!given.empty()) {
    os << '|';
    for (std::size_t i = 0; i < given.size(); ++i) os << (i ? "," : "") << given[i];
  }
  return os.str();
}

VineEdge join_edges(const VineEdge& left, const VineEdge& right, int left_index, int right_index) {
  bool adjacent = false;
  if (left.left < 0) {
    adjacent = left.a == right.a || left.a == right.b || left.b == right.a || left.b == right.b;
  } else {
    adjacent = left.left == right.left || left.left == right.right || left.right == right.left ||
               left.right == right.right;
  }
  const unsigned lm = left.mask(), rm = right.mask();
  const unsigned shared = lm & rm;
  if (!adjacent || lm == rm || std::popcount(shared) != std::popcount(lm) - 1)
    throw Error(ErrorCode::domain, "edges " + left.label() + " and " + right.label() + " violate proximity");
  const int x = std::countr_zero(lm & ~shared);
  const int y = std::countr_zero(rm & ~shared);
  VineEdge e;
  e.a = std::min(x, y);
  e.b = std::max(x, y);
  for (int v = 0; v < 32; ++v)
    if ((shared >> v) & 1u) e.given.push_back(v);
  e.left = left_index;
  e.right = right_index;
  return e;
}

VineStructure::VineStructure(int dim, std::vector<std::vector<VineEdge>> trees) : dim_(dim), trees_(std::move(trees)) {
  if (dim_ < 2 || dim_ > kMaxDim) throw Error(ErrorCode::domain, "vines support 2 to 4 variables");
  if (static_cast<int>(trees_.size()) != dim_ - 1) throw Error(ErrorCode::domain, "vine needs dim - 1 trees");
  for (int level = 0; level < dim_ - 1; ++level) {
    const auto& tree = trees_[static_cast<std::size_t>(level)];
    if (static_cast<int>(tree.size()) != dim_ - 1 - level)
      throw Error(ErrorCode::domain, "tree " + std::to_string(level + 1) + " has the wrong number of edges");
    std::vector<std::pair<int, int>> links;
    for (const auto& e : tree) {
      if (level == 0) {
        if (e.a < 0 || e.b >= dim_ || e.a >= e.b || !e.given.empty() || e.left != -1 || e.right != -1)
          throw Error(ErrorCode::domain, "malformed first-tree edge " + e.label());
        links.push_back({e.a, e.b});
      } else {
        const auto& prev = trees_[static_cast<std::size_t>(level - 1)];
        const int n_prev = static_cast<int>(prev.size());
        if (e.left < 0 || e.right < 0 || e.left >= n_prev || e.right >= n_prev || e.left == e.right)
          throw Error(ErrorCode::domain, "edge " + e.label() + " has invalid parents");
        const auto joined = join_edges(prev[static_cast<std::size_t>(e.left)], prev[static_cast<std::size_t>(e.right)],
                                       e.left, e.right);
        if (joined.a != e.a || joined.b != e.b || joined.given != e.given)
          throw Error(ErrorCode::domain, "edge " + e.label() + " does not match its parents");
        links.push_back({e.left, e.right});
      }
    }
    const int nodes = level == 0 ? dim_ : static_cast<int>(trees_[static_cast<std::size_t>(level - 1)].size());
    if (!is_spanning_tree(nodes, links))
      throw Error(ErrorCode::domain, "tree " + std::to_string(level + 1) + " is not a spanning tree");
  }
}

VineStructure VineStructure::from_parents(int dim, const std::vector<std::pair<int, int>>& first_tree,
                                          const std::vector<std::vector<std::pair<int, int>>>& deeper) {
  std::vector<std::vector<VineEdge>> trees(1);
  for (auto [p, q] : first_tree) {
    VineEdge e;
    e.a = std::min(p, q);
    e.b = std::max(p, q);
    trees[0].push_back(e);
  }
  for (const auto& links : deeper) {
    const auto& prev = trees.back();
    std::vector<VineEdge> tree;
    for (auto [p, q] : links) {
      if (p < 0 || q < 0 || p >= static_cast<int>(prev.size()) || q >= static_cast<int>(prev.size()))
        throw Error(ErrorCode::domain, "parent index out of range");
      tree.push_back(join_edges(prev[static_cast<std::size_t>(p)], prev[static_cast<std::size_t>(q)], p, q));
    }
    trees.push_back(std::move(tree));
  }
  return {dim, std::move(trees)};
}

VineStructure VineStructure::d_vine(std::vector<int> order) {
  const int dim = static_cast<int>(order.size());
  std::vector<std::pair<int, int>> first;
  for (int i = 0; i + 1 < dim; ++i) first.push_back({order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i + 1)]});
  std::vector<std::vector<std::pair<int, int>>> deeper;
  for (int level = 1; level < dim - 1; ++level) {
    std::vector<std::pair<int, int>> links;
    for (int i = 0; i + 1 < dim - level; ++i) links.push_back({i, i + 1});
    deeper.push_back(links);
  }
  return from_parents(dim, first, deeper);
}

VineStructure VineStructure::c_vine(std::vector<int> order) {
  const int dim = static_cast<int>(order.size());
  std::vector<std::pair<int, int>> first;
  for (int i = 1; i < dim; ++i) first.push_back({order[0], order[static_cast<std::size_t>(i)]});
  std::vector<std::vector<std::pair<int, int>>> deeper;
  for (int level = 1; level < dim - 1; ++level) {
    std::vector<std::pair<int, int>> links;
    for (int i = 1; i < dim - level; ++i) links.push_back({0, i});
    deeper.push_back(links);
  }
  return from_parents(dim, first, deeper);
}

// ---- models -----------------------------------------------------------------

double VineModel::loglik() const {
  double s = 0.0;
  for (const auto& tree : edges)
    for (const auto& e : tree) s += e.loglik;
  return s;
}

double VineModel::aic() const {
  double s = 0.0;
  for (const auto& tree : edges)
    for (const auto& e : tree) s += 2.0 * e.copula.parameter_count() - 2.0 * e.loglik;
  return s;
}

VineModel make_vine(VineStructure structure, const std::vector<std::vector<BivariateCopula>>& copulas) {
  if (copulas.size() != structure.trees().size()) throw Error(ErrorCode::domain, "copula list does not match trees");
  VineModel m;
  for (std::size_t level = 0; level < copulas.size(); ++level) {
    if (copulas[level].size() != structure.trees()[level].size())
      throw Error(ErrorCode::domain, "copula list does not match tree " + std::to_string(level + 1));
    std::vector<EdgeFit> tree;
    for (const auto& c : copulas[level]) {
      EdgeFit f;
      f.copula = c;
      tree.push_back(f);
    }
    m.edges.push_back(std::move(tree));
  }
  m.structure = std::move(structure);
  return m;
}

VineModel gaussian_vine(VineStructure structure, const MatrixXd& correlation) {
  const int dim = structure.dim();
  if (correlation.rows() != dim || correlation.cols() != dim)
    throw Error(ErrorCode::domain, "correlation matrix size does not match the vine");
  Eigen::LLT<MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success || !correlation.isApprox(correlation.transpose()))
    throw Error(ErrorCode::domain, "correlation matrix is not symmetric positive definite");
  std::vector<std::vector<BivariateCopula>> copulas;
  for (const auto& tree : structure.trees()) {
    std::vector<BivariateCopula> level;
    for (const auto& e : tree) {
      std::vector<int> idx{e.a, e.b};
      idx.insert(idx.end(), e.given.begin(), e.given.end());
      MatrixXd sub(idx.size(), idx.size());
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) sub(static_cast<Index>(r), static_cast<Index>(c)) = correlation(idx[r], idx[c]);
      const MatrixXd prec = sub.inverse();
      const double rho = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
      level.push_back(rho == 0.0 ? BivariateCopula::independence() : BivariateCopula::gaussian(rho));
    }
    copulas.push_back(std::move(level));
  }
  return make_vine(std::move(structure), copulas);
}

VineModel select_and_fit(const Eigen::Ref<const MatrixXd>& pseudo_obs, std::span<const Candidate> candidates) {
  check_pseudo_obs(pseudo_obs, 100);
  return build(pseudo_obs, candidates, nullptr);
}

VineStructure select_structure(const Eigen::Ref<const MatrixXd>& pseudo_obs, std::span<const Candidate> candidates) {
  return select_and_fit(pseudo_obs, candidates).structure;
}

VineModel fit_vine(const Eigen::Ref<const MatrixXd>& pseudo_obs, const VineStructure& structure,
                   std::span<const Candidate> candidates) {
  check_pseudo_obs(pseudo_obs, 30);
  if (pseudo_obs.cols() != structure.dim()) throw Error(ErrorCode::domain, "data and structure dimensions differ");
  return build(pseudo_obs, candidates, &structure);
}

std::vector<std::vector<double>> edge_logliks(const VineModel& model, const Eigen::Ref<const MatrixXd>& pseudo_obs) {
  if (pseudo_obs.cols() != model.dim()) throw Error(ErrorCode::domain, "data and model dimensions differ");
  std::vector<std::vector<double>> out;
  for (const auto& tree : model.structure.trees()) out.emplace_back(tree.size(), 0.0);
  propagate(model, pseudo_obs, [&](std::size_t level, std::size_t k, const BivariateCopula& c, const EdgeFlow& f) {
    out[level][k] = loglik(c, pairs_of(f));
  });
  return out;
}

double loglik(const VineModel& model, const Eigen::Ref<const MatrixXd>& pseudo_obs) {
  double s = 0.0;
  for (const auto& tree : edge_logliks(model, pseudo_obs))
    for (double v : tree) s += v;
  return s;
}

MatrixXd inverse_rosenblatt(const VineModel& model, const MatrixXd& uniforms) {
  const int dim = model.dim();
  if (uniforms.cols() != dim) throw Error(ErrorCode::domain, "uniform matrix has the wrong width");
  const auto plan = plan_sampling(model.structure);
  MatrixXd out = MatrixXd::Constant(uniforms.rows(), dim, 0.5);
  ConditionalCache cache(model, out);
  unsigned prefix = 0;
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    const int x = plan.order[i];
    VectorXd value = uniforms.col(static_cast<Index>(i));
    unsigned given = prefix;
    for (std::size_t k = plan.chains[i].size(); k-- > 0;) {
      const auto& link = plan.chains[i][k];
      const auto& e = model.structure.trees()[static_cast<std::size_t>(link.level)][static_cast<std::size_t>(link.index)];
      const auto& c = model.edges[static_cast<std::size_t>(link.level)][static_cast<std::size_t>(link.index)].copula;
      cache.store(x, given, value);
      given &= ~(1u << link.partner);
      const VectorXd& other = cache.get(link.partner, given);
      value = x == e.a ? hinv2(c, value, other) : hinv1(c, value, other);
    }
    out.col(x) = value;
    cache.store(x, 0u, value);
    prefix |= 1u << x;
  }
  return out;
}

MatrixXd simulate(const VineModel& model, Index n, std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::domain, "sample size must be positive");
  Rng rng(seed);
  MatrixXd w(n, model.dim());
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform();
  return inverse_rosenblatt(model, w);
}

// ---- weights and induced measures --------------------------------------------

MatrixXd tau_weights(const Eigen::Ref<const MatrixXd>& pseudo_obs) {
  const Index d = pseudo_obs.cols();
  MatrixXd w = MatrixXd::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) w(i, j) = w(j, i) = std::abs(kendall_tau(pseudo_obs.col(i), pseudo_obs.col(j)));
  return w;
}

double first_tree_weight(const VineStructure& structure, const MatrixXd& weights) {
  double s = 0.0;
  for (const auto& e : structure.trees().front()) s += weights(e.a, e.b);
  return s;
}

double exhaustive_spanning_weight(const MatrixXd& weights) {
  const int d = static_cast<int>(weights.rows());
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) all.push_back({i, j});
  double best = -std::numeric_limits<double>::infinity();
  const unsigned subsets = 1u << all.size();
  for (unsigned s = 0; s < subsets; ++s) {
    if (std::popcount(s) != d - 1) continue;
    std::vector<std::pair<int, int>> links;
    double w = 0.0;
    for (std::size_t k = 0; k < all.size(); ++k)
      if ((s >> k) & 1u) {
        links.push_back(all[k]);
        w += weights(all[k].first, all[k].second);
      }
    if (is_spanning_tree(d, links)) best = std::max(best, w);
  }
  return best;
}

MonteCarloValue induced_spearman(const VineModel& model, int i, int j, Index n_mc, std::uint64_t seed) {
  if (i < 0 || j < 0 || i >= model.dim() || j >= model.dim() || i == j)
    throw Error(ErrorCode::domain, "invalid variable pair");
  if (n_mc < 10000) throw Error(ErrorCode::domain, "induced Spearman needs at least 10^4 draws");
  const MatrixXd s = simulate(model, n_mc, seed);
  const double rho = spearman(s.col(i), s.col(j));
  return {rho, spearman_stderr(rho, static_cast<double>(n_mc))};
}

MatrixXd induced_spearman_matrix(const VineModel& model, Index n_mc, std::uint64_t seed) {
  if (n_mc < 10000) throw Error(ErrorCode::domain, "induced Spearman needs at least 10^4 draws");
  const MatrixXd s = simulate(model, n_mc, seed);
  const Index d = s.cols();
  MatrixXd out = MatrixXd::Identity(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) out(i, j) = out(j, i) = spearman(s.col(i), s.col(j));
  return out;
}

PairTail pair_tail(const Eigen::Ref<const MatrixXd>& sample, int i, int j, std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorCode::domain, "empty tail grid");
  if (i < 0 || j < 0 || i >= sample.cols() || j >= sample.cols() || i == j)
    throw Error(ErrorCode::domain, "invalid variable pair");
  const double n = static_cast<double>(sample.rows());
  for (double t : grid) {
    if (!(t > 0.0 && t <= 0.1)) throw Error(ErrorCode::domain, "tail grid values must lie in (0, 0.1]");
    if (n * t < 20.0)
      throw Error(ErrorCode::resolution, "expected tail count below 20 at t = " + format_double(t) +
                                             "; increase the Monte Carlo size");
  }
  PairTail out;
  std::vector<double> ts, lo, hi;
  for (double t : grid) {
    Index low = 0, high = 0;
    for (Index r = 0; r < sample.rows(); ++r) {
      const double a = sample(r, i), b = sample(r, j);
      low += a <= t && b <= t;
      high += a > 1.0 - t && b > 1.0 - t;
    }
    TailPoint p;
    p.t = t;
    p.lower = static_cast<double>(low) / (n * t);
    p.upper = static_cast<double>(high) / (n * t);
    const double pl = std::clamp(p.lower, 0.0, 1.0), pu = std::clamp(p.upper, 0.0, 1.0);
    p.lower_stderr = std::sqrt(pl * (1.0 - pl) / (n * t));
    p.upper_stderr = std::sqrt(pu * (1.0 - pu) / (n * t));
    out.points.push_back(p);
    ts.push_back(t);
    lo.push_back(p.lower);
    hi.push_back(p.upper);
  }
  if (grid.size() >= 2) {
    out.lower_limit = std::clamp(least_squares_line(ts, lo).intercept, 0.0, 1.0);
    out.upper_limit = std::clamp(least_squares_line(ts, hi).intercept, 0.0, 1.0);
  } else {
    out.lower_limit = out.points[0].lower;
    out.upper_limit = out.points[0].upper;
  }
  return out;
}

PairTail induced_pair_tdc(const VineModel& model, int i, int j, std::span<const double> grid, Index n_mc,
                          std::uint64_t seed) {
  for (double t : grid)
    if (static_cast<double>(n_mc) * t < 20.0)
      throw Error(ErrorCode::resolution, "expected tail count below 20 at t = " + format_double(t) +
                                             "; increase the Monte Carlo size");
  return pair_tail(simulate(model, n_mc, seed), i, j, grid);
}

}  // namespace vinetail
