#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "causalagg/categorical.hpp"
#include "causalagg/gaussian.hpp"
#include "causalagg/linalg.hpp"
#include "causalagg/rng.hpp"

namespace causalagg {

enum class Domain { Real, Categorical };

struct NodeSpec {
  std::string name;
  int dim = 1;
  Domain domain = Domain::Real;
  std::vector<int> cardinalities;  // categorical only, one entry per component
};

struct GaussianEdge {
  std::string from, to;
  MatrixXd coeff;  // child.dim x parent.dim
};

struct Violation {
  std::string node;
  std::string message;
};

namespace detail {

template <class Model>
int node_index_of(const Model& m, const std::string& name) {
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    if (m.nodes[i].name == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown node '" + name + "'");
}

// Adjacency by node index; edges must reference known nodes.
template <class Model>
std::vector<std::vector<int>> children_lists(const Model& m) {
  std::vector<std::vector<int>> ch(m.nodes.size());
  for (const auto& e : m.edges)
    ch[node_index_of(m, e.from)].push_back(node_index_of(m, e.to));
  return ch;
}

inline std::set<int> reachable_from(const std::vector<std::vector<int>>& ch, int start) {
  std::set<int> seen;
  std::vector<int> stack{start};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : ch[v])
      if (seen.insert(w).second) stack.push_back(w);
  }
  return seen;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear-Gaussian SCM: X_j := sum_p coeff_{p -> j} X_p + U_j with jointly
// independent Gaussian noises. Nodes are stored in topological order;
// validation checks that the stored order is consistent with the edges.
// ---------------------------------------------------------------------------
struct LinearGaussianScm {
  std::vector<NodeSpec> nodes;
  std::vector<GaussianEdge> edges;
  std::map<std::string, VectorXd> noise_mean;
  std::map<std::string, MatrixXd> noise_cov;

  int node_index(const std::string& name) const { return detail::node_index_of(*this, name); }

  bool has_node(const std::string& name) const {
    return std::any_of(nodes.begin(), nodes.end(),
                       [&](const NodeSpec& n) { return n.name == name; });
  }

  int total_dim() const {
    int d = 0;
    for (const auto& n : nodes) d += n.dim;
    return d;
  }

  int offset_of(const std::string& name) const {
    int off = 0;
    for (const auto& n : nodes) {
      if (n.name == name) return off;
      off += n.dim;
    }
    throw std::invalid_argument("unknown node '" + name + "'");
  }

  std::vector<std::string> parents(const std::string& name) const {
    std::vector<std::string> ps;
    for (const auto& e : edges)
      if (e.to == name) ps.push_back(e.from);
    return ps;
  }

  // Column labels, topological order then component index.
  std::vector<std::string> component_labels() const {
    std::vector<std::string> out;
    for (const auto& n : nodes) {
      if (n.dim == 1) {
        out.push_back(n.name);
      } else {
        for (int i = 0; i < n.dim; ++i) out.push_back(n.name + "[" + std::to_string(i) + "]");
      }
    }
    return out;
  }

  std::vector<std::string> labels_of(const std::string& name) const {
    const int i = node_index(name);
    std::vector<std::string> out;
    if (nodes[i].dim == 1) {
      out.push_back(name);
    } else {
      for (int c = 0; c < nodes[i].dim; ++c) out.push_back(name + "[" + std::to_string(c) + "]");
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Finite categorical SCM: one CPT per node, rows indexed by the joint parent
// configuration (parents in stored node order, last parent fastest).
// Categorical nodes are scalar; vector-valued state is modelled as separate
// nodes grouped by an aggregation.
// ---------------------------------------------------------------------------
struct CategoricalScm {
  std::vector<NodeSpec> nodes;
  std::vector<GaussianEdge> edges;  // coeff unused; kept for a uniform edge type
  std::map<std::string, MatrixXd> cpt;

  int node_index(const std::string& name) const { return detail::node_index_of(*this, name); }

  bool has_node(const std::string& name) const {
    return std::any_of(nodes.begin(), nodes.end(),
                       [&](const NodeSpec& n) { return n.name == name; });
  }

  int cardinality(const std::string& name) const {
    return nodes[node_index(name)].cardinalities.at(0);
  }

  // Parent node indices in stored (topological) order.
  std::vector<int> parent_indices(const std::string& name) const {
    std::vector<int> ps;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (const auto& e : edges)
        if (e.to == name && e.from == nodes[i].name) ps.push_back(static_cast<int>(i));
    return ps;
  }
};

using Scm = std::variant<LinearGaussianScm, CategoricalScm>;

// ---------------------------------------------------------------------------
// Validation. Violations are data, not failures.
// ---------------------------------------------------------------------------
inline std::vector<Violation> validate_scm(const LinearGaussianScm& m) {
  std::vector<Violation> v;
  std::set<std::string> seen;
  for (const auto& n : m.nodes) {
    if (!seen.insert(n.name).second) v.push_back({n.name, "duplicate node name"});
    if (n.dim < 1) v.push_back({n.name, "dim must be >= 1"});
    if (n.domain != Domain::Real)
      v.push_back({n.name, "linear-Gaussian models require real nodes"});
  }
  auto order_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < m.nodes.size(); ++i)
      if (m.nodes[i].name == name) return static_cast<int>(i);
    return -1;
  };
  for (const auto& e : m.edges) {
    const int a = order_of(e.from), b = order_of(e.to);
    if (a < 0 || b < 0) {
      v.push_back({e.from + "->" + e.to, "edge references unknown node"});
      continue;
    }
    if (a >= b)
      v.push_back({"{" + e.from + "," + e.to + "}",
                   "acyclicity: edge violates the stored topological order"});
    else if (e.coeff.rows() != m.nodes[b].dim || e.coeff.cols() != m.nodes[a].dim)
      v.push_back({e.to, "coefficient shape inconsistent with node dims on edge from " + e.from});
  }
  for (const auto& n : m.nodes) {
    const auto mi = m.noise_mean.find(n.name);
    const auto ci = m.noise_cov.find(n.name);
    if (mi == m.noise_mean.end() || mi->second.size() != n.dim) {
      v.push_back({n.name, "noise mean missing or wrong size"});
      continue;
    }
    if (ci == m.noise_cov.end() || ci->second.rows() != n.dim || ci->second.cols() != n.dim) {
      v.push_back({n.name, "noise covariance missing or wrong shape"});
      continue;
    }
    const MatrixXd s = symmetrized(ci->second);
    if (min_eigenvalue(s) < -1e-10 * std::max(1.0, s.cwiseAbs().maxCoeff()))
      v.push_back({n.name, "noise covariance not PSD"});
  }
  return v;
}

inline std::vector<Violation> validate_scm(const CategoricalScm& m) {
  std::vector<Violation> v;
  std::set<std::string> seen;
  for (const auto& n : m.nodes) {
    if (!seen.insert(n.name).second) v.push_back({n.name, "duplicate node name"});
    if (n.domain != Domain::Categorical)
      v.push_back({n.name, "categorical models require categorical nodes"});
    if (n.dim != 1) v.push_back({n.name, "categorical nodes must be scalar"});
    if (n.cardinalities.size() != 1 || n.cardinalities[0] < 2)
      v.push_back({n.name, "cardinality must be >= 2"});
  }
  auto order_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < m.nodes.size(); ++i)
      if (m.nodes[i].name == name) return static_cast<int>(i);
    return -1;
  };
  for (const auto& e : m.edges) {
    const int a = order_of(e.from), b = order_of(e.to);
    if (a < 0 || b < 0)
      v.push_back({e.from + "->" + e.to, "edge references unknown node"});
    else if (a >= b)
      v.push_back({"{" + e.from + "," + e.to + "}",
                   "acyclicity: edge violates the stored topological order"});
  }
  for (const auto& n : m.nodes) {
    if (n.cardinalities.size() != 1) continue;
    const auto it = m.cpt.find(n.name);
    if (it == m.cpt.end()) {
      v.push_back({n.name, "missing CPT"});
      continue;
    }
    std::size_t rows = 1;
    for (int p : m.parent_indices(n.name))
      rows *= static_cast<std::size_t>(m.nodes[p].cardinalities.at(0));
    if (it->second.rows() != static_cast<Eigen::Index>(rows) ||
        it->second.cols() != n.cardinalities[0]) {
      v.push_back({n.name, "CPT shape inconsistent with parent configuration count"});
      continue;
    }
    for (Eigen::Index r = 0; r < it->second.rows(); ++r) {
      if (it->second.row(r).minCoeff() < 0.0)
        v.push_back({n.name, "CPT row " + std::to_string(r) + " has a negative entry"});
      if (std::abs(it->second.row(r).sum() - 1.0) > 1e-12)
        v.push_back({n.name, "normalization: CPT row " + std::to_string(r) +
                                 " sums to " + std::to_string(it->second.row(r).sum())});
    }
  }
  return v;
}

inline std::vector<Violation> validate_scm(const Scm& m) {
  return std::visit([](const auto& s) { return validate_scm(s); }, m);
}

template <class Model>
void require_valid(const Model& m) {
  const auto v = validate_scm(m);
  if (!v.empty())
    throw std::invalid_argument("invalid model: " + v.front().node + ": " + v.front().message);
}

// ---------------------------------------------------------------------------
// Structural reduction of the linear-Gaussian model: X = W X + U, so
// X = (I - W)^{-1} U, solved exactly. An optional surgery replaces the
// mechanisms of a node group by a joint Gaussian over their stacked
// components (incoming edges cut).
// ---------------------------------------------------------------------------
struct GaussianSurgery {
  std::vector<std::string> nodes;  // replaced as a group, stacked in this order
  GaussianDist replacement;        // dimension = sum of group dims
};

inline GaussianDist joint_moments(const LinearGaussianScm& m,
                                  const std::optional<GaussianSurgery>& surgery = std::nullopt) {
  require_valid(m);
  const int d = m.total_dim();
  MatrixXd w = MatrixXd::Zero(d, d);
  VectorXd noise_mean = VectorXd::Zero(d);
  MatrixXd noise_cov = MatrixXd::Zero(d, d);
  for (const auto& n : m.nodes) {
    const int off = m.offset_of(n.name);
    noise_mean.segment(off, n.dim) = m.noise_mean.at(n.name);
    noise_cov.block(off, off, n.dim, n.dim) = symmetrized(m.noise_cov.at(n.name));
  }
  for (const auto& e : m.edges) {
    const int r = m.offset_of(e.to);
    const int c = m.offset_of(e.from);
    w.block(r, c, e.coeff.rows(), e.coeff.cols()) += e.coeff;
  }

  if (surgery) {
    int repl_dim = 0;
    for (const auto& name : surgery->nodes) repl_dim += m.nodes[m.node_index(name)].dim;
    if (surgery->replacement.dim() != repl_dim)
      throw std::invalid_argument("joint_moments: replacement dimension mismatch");
    // Cut incoming edges and clear the old noise blocks of the group.
    for (const auto& name : surgery->nodes) {
      const int off = m.offset_of(name);
      const int nd = m.nodes[m.node_index(name)].dim;
      w.block(off, 0, nd, d).setZero();
      noise_cov.block(off, 0, nd, d).setZero();
      noise_cov.block(0, off, d, nd).setZero();
    }
    // Install the joint replacement across the group blocks.
    int ro = 0;
    for (const auto& a : surgery->nodes) {
      const int aoff = m.offset_of(a);
      const int ad = m.nodes[m.node_index(a)].dim;
      noise_mean.segment(aoff, ad) = surgery->replacement.mean.segment(ro, ad);
      int co = 0;
      for (const auto& b : surgery->nodes) {
        const int boff = m.offset_of(b);
        const int bd = m.nodes[m.node_index(b)].dim;
        noise_cov.block(aoff, boff, ad, bd) = surgery->replacement.cov.block(ro, co, ad, bd);
        co += bd;
      }
      ro += ad;
    }
  }

  const MatrixXd t = (MatrixXd::Identity(d, d) - w).inverse();
  GaussianDist out;
  out.mean = t * noise_mean;
  out.cov = symmetrized(t * noise_cov * t.transpose());
  out.labels = m.component_labels();
  return out;
}

// ---------------------------------------------------------------------------
// Exact joint of a categorical model by full enumeration, optionally with one
// node's mechanism replaced (incoming edges cut). Axis order = node order,
// last node fastest.
// ---------------------------------------------------------------------------
struct CategoricalSurgery {
  std::string node;
  VectorXd replacement;  // distribution over the node's categories
};

inline CategoricalDist joint_table(const CategoricalScm& m,
                                   const std::optional<CategoricalSurgery>& surgery = std::nullopt,
                                   std::size_t state_cap = 10'000'000) {
  require_valid(m);
  CategoricalDist out;
  for (const auto& n : m.nodes) out.axes.push_back({n.name, n.cardinalities.at(0)});
  const MixedRadix mr = out.radix();
  if (mr.size() > state_cap)
    throw std::invalid_argument("joint_table: state space exceeds cap of " +
                                std::to_string(state_cap));

  int surgery_node = -1;
  if (surgery) {
    surgery_node = m.node_index(surgery->node);
    if (surgery->replacement.size() != m.nodes[surgery_node].cardinalities.at(0))
      throw std::invalid_argument("joint_table: replacement axis mismatch");
  }

  std::vector<std::vector<int>> parents;
  std::vector<MixedRadix> parent_radix;
  for (const auto& n : m.nodes) {
    parents.push_back(m.parent_indices(n.name));
    std::vector<int> cards;
    for (int p : parents.back()) cards.push_back(m.nodes[p].cardinalities.at(0));
    parent_radix.emplace_back(cards);
  }

  out.probs = VectorXd::Zero(static_cast<Eigen::Index>(mr.size()));
  std::vector<int> pcfg;
  for (std::size_t f = 0; f < mr.size(); ++f) {
    const std::vector<int> digits = mr.digits(f);
    double p = 1.0;
    for (std::size_t k = 0; k < m.nodes.size(); ++k) {
      if (static_cast<int>(k) == surgery_node) {
        p *= surgery->replacement[digits[k]];
      } else {
        pcfg.clear();
        for (int pi : parents[k]) pcfg.push_back(digits[pi]);
        const std::size_t row = parent_radix[k].flat(pcfg);
        p *= m.cpt.at(m.nodes[k].name)(static_cast<Eigen::Index>(row), digits[k]);
      }
      if (p == 0.0) break;
    }
    out.probs[static_cast<Eigen::Index>(f)] = p;
  }
  return out;
}

inline CategoricalDist intervene_discrete(const CategoricalScm& m, const std::string& node,
                                          const CategoricalDist& replacement) {
  if (replacement.axes.size() != 1 || replacement.axes[0].second != m.cardinality(node))
    throw std::invalid_argument("intervene_discrete: replacement axes mismatch");
  return joint_table(m, CategoricalSurgery{node, replacement.probs});
}

// ---------------------------------------------------------------------------
// Frozen twin: the model extended with primed copies of `node` (pinned to a
// constant) and its strict descendants, rewired so a primed node reads primed
// parents where those exist. Noises of primed descendants are independent
// copies; shared ancestors are not duplicated, which is exactly what makes
// queries that mix a frozen variable with observational ones well defined.
// ---------------------------------------------------------------------------
inline std::string twin_name(const std::string& name) { return name + "'"; }

inline LinearGaussianScm frozen_twin_model(const LinearGaussianScm& m, const std::string& node,
                                           const VectorXd& value) {
  const int i = m.node_index(node);
  if (value.size() != m.nodes[i].dim)
    throw std::invalid_argument("frozen_twin_model: value dimension mismatch");
  const auto ch = detail::children_lists(m);
  const std::set<int> desc = detail::reachable_from(ch, i);

  LinearGaussianScm out = m;
  std::set<std::string> twinned{node};
  for (int dnode : desc) twinned.insert(m.nodes[dnode].name);

  // Primed frozen node: constant.
  out.nodes.push_back({twin_name(node), m.nodes[i].dim, Domain::Real, {}});
  out.noise_mean[twin_name(node)] = value;
  out.noise_cov[twin_name(node)] = MatrixXd::Zero(m.nodes[i].dim, m.nodes[i].dim);

  // Primed descendants in topological order, wired to primed parents where
  // the parent was twinned.
  for (const auto& n : m.nodes) {
    if (desc.count(m.node_index(n.name)) == 0) continue;
    out.nodes.push_back({twin_name(n.name), n.dim, Domain::Real, {}});
    out.noise_mean[twin_name(n.name)] = m.noise_mean.at(n.name);
    out.noise_cov[twin_name(n.name)] = m.noise_cov.at(n.name);
    for (const auto& e : m.edges) {
      if (e.to != n.name) continue;
      const std::string from = twinned.count(e.from) ? twin_name(e.from) : e.from;
      out.edges.push_back({from, twin_name(n.name), e.coeff});
    }
  }
  return out;
}

inline CategoricalScm frozen_twin_model(const CategoricalScm& m, const std::string& node,
                                        int category) {
  const int i = m.node_index(node);
  const int card = m.nodes[i].cardinalities.at(0);
  if (category < 0 || category >= card)
    throw std::invalid_argument("frozen_twin_model: category out of range");
  const auto ch = detail::children_lists(m);
  const std::set<int> desc = detail::reachable_from(ch, i);

  CategoricalScm out = m;
  std::set<std::string> twinned{node};
  for (int dnode : desc) twinned.insert(m.nodes[dnode].name);

  out.nodes.push_back({twin_name(node), 1, Domain::Categorical, {card}});
  MatrixXd point = MatrixXd::Zero(1, card);
  point(0, category) = 1.0;
  out.cpt[twin_name(node)] = point;

  for (const auto& n : m.nodes) {
    if (desc.count(m.node_index(n.name)) == 0) continue;
    out.nodes.push_back({twin_name(n.name), 1, Domain::Categorical, n.cardinalities});
    out.cpt[twin_name(n.name)] = m.cpt.at(n.name);
    for (const auto& e : m.edges) {
      if (e.to != n.name) continue;
      const std::string from = twinned.count(e.from) ? twin_name(e.from) : e.from;
      out.edges.push_back({from, twin_name(n.name), MatrixXd()});
    }
  }
  // CPT parent order must match: parent_indices() follows stored node order,
  // and twinned parents appear after the originals, so remap is needed only
  // when a node mixes original and twinned parents. Rebuild rows explicitly.
  for (const auto& n : m.nodes) {
    if (desc.count(m.node_index(n.name)) == 0) continue;
    const std::string tn = twin_name(n.name);
    const auto orig_parents = m.parent_indices(n.name);
    const auto new_parents = out.parent_indices(tn);
    if (orig_parents.size() != new_parents.size())
      throw std::logic_error("frozen_twin_model: parent arity changed");
    // Row order in the original CPT follows orig_parents; in the twin it
    // follows new_parents (same multiset of cardinalities, possibly permuted).
    std::vector<int> perm(new_parents.size());
    for (std::size_t a = 0; a < new_parents.size(); ++a) {
      const std::string base = out.nodes[new_parents[a]].name;
      const std::string stripped =
          base.size() && base.back() == '\'' ? base.substr(0, base.size() - 1) : base;
      int found = -1;
      for (std::size_t b = 0; b < orig_parents.size(); ++b)
        if (m.nodes[orig_parents[b]].name == stripped) found = static_cast<int>(b);
      if (found < 0) throw std::logic_error("frozen_twin_model: parent remap failed");
      perm[a] = found;
    }
    std::vector<int> new_cards, orig_cards;
    for (int p : new_parents) new_cards.push_back(out.nodes[p].cardinalities.at(0));
    for (int p : orig_parents) orig_cards.push_back(m.nodes[p].cardinalities.at(0));
    const MixedRadix new_mr(new_cards), orig_mr(orig_cards);
    MatrixXd rows(static_cast<Eigen::Index>(new_mr.size()), m.cpt.at(n.name).cols());
    std::vector<int> od(orig_parents.size());
    for (std::size_t r = 0; r < new_mr.size(); ++r) {
      const std::vector<int> nd = new_mr.digits(r);
      for (std::size_t a = 0; a < perm.size(); ++a) od[perm[a]] = nd[a];
      rows.row(static_cast<Eigen::Index>(r)) =
          m.cpt.at(n.name).row(static_cast<Eigen::Index>(orig_mr.flat(od)));
    }
    out.cpt[tn] = rows;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ancestral sampling. Deterministic given the seed; columns follow
// component_labels() order.
// ---------------------------------------------------------------------------
inline MatrixXd sample(const LinearGaussianScm& m, int n, std::uint64_t seed) {
  require_valid(m);
  Rng rng(seed);
  const int d = m.total_dim();
  MatrixXd out(n, d);
  for (const auto& node : m.nodes) {
    const int off = m.offset_of(node.name);
    const MatrixXd root = psd_sqrt(m.noise_cov.at(node.name));
    const VectorXd& mu = m.noise_mean.at(node.name);
    MatrixXd z(n, node.dim);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < node.dim; ++c) z(r, c) = rng.normal();
    out.middleCols(off, node.dim) = z * root.transpose();
    out.middleCols(off, node.dim).rowwise() += mu.transpose();
    for (const auto& e : m.edges)
      if (e.to == node.name)
        out.middleCols(off, node.dim) +=
            out.middleCols(m.offset_of(e.from), e.coeff.cols()) * e.coeff.transpose();
  }
  return out;
}

// Sample matrix of category indices (stored as doubles for a uniform return
// type with the Gaussian sampler).
inline MatrixXd sample(const CategoricalScm& m, int n, std::uint64_t seed) {
  require_valid(m);
  Rng rng(seed);
  const int d = static_cast<int>(m.nodes.size());
  MatrixXd out(n, d);
  std::vector<std::vector<int>> parents;
  std::vector<MixedRadix> parent_radix;
  for (const auto& node : m.nodes) {
    parents.push_back(m.parent_indices(node.name));
    std::vector<int> cards;
    for (int p : parents.back()) cards.push_back(m.nodes[p].cardinalities.at(0));
    parent_radix.emplace_back(cards);
  }
  std::vector<int> pcfg;
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < d; ++k) {
      pcfg.clear();
      for (int p : parents[k]) pcfg.push_back(static_cast<int>(out(r, p)));
      const auto& row = m.cpt.at(m.nodes[k].name).row(
          static_cast<Eigen::Index>(parent_radix[k].flat(pcfg)));
      const double u = rng.uniform();
      double acc = 0.0;
      int cat = m.nodes[k].cardinalities.at(0) - 1;
      for (int c = 0; c < row.size(); ++c) {
        acc += row(c);
        if (u <= acc) { cat = c; break; }
      }
      out(r, k) = cat;
    }
  }
  return out;
}

inline MatrixXd sample(const Scm& m, int n, std::uint64_t seed) {
  return std::visit([&](const auto& s) { return sample(s, n, seed); }, m);
}

}  // namespace causalagg
