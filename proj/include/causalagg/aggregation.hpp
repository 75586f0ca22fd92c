#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "causalagg/categorical.hpp"
#include "causalagg/gaussian.hpp"
#include "causalagg/model.hpp"

namespace causalagg {

// Aggregation of one or more micro nodes into a macro variable. Real nodes
// aggregate by componentwise sum or mean over the stacked components of the
// listed nodes; categorical aggregation coarsens a single node's categories.
struct AggregationSpec {
  enum class Kind { Sum, Mean, Discrete };
  std::vector<std::string> nodes;
  Kind kind = Kind::Sum;
  DiscreteAggregation table;  // Discrete only; nodes must be a single entry
  std::string macro_name;
};

struct Assumption1Certificate {
  std::vector<std::string> nodes;
  bool holds = false;
};

// Assumption: no directed causal paths among the variables being aggregated.
// Components inside one vector node carry no causal order by construction, so
// a violation can only arise between distinct nodes grouped by the spec.
template <class Model>
Assumption1Certificate check_assumption1(const Model& model, const AggregationSpec& agg) {
  for (const auto& name : agg.nodes)
    if (!model.has_node(name)) throw std::invalid_argument("check_assumption1: unknown node '" + name + "'");
  Assumption1Certificate cert;
  cert.nodes = agg.nodes;
  cert.holds = true;
  const auto children = detail::children_lists(model);
  for (const auto& a : agg.nodes) {
    const auto reach = detail::reachable_from(children, model.node_index(a));
    for (const auto& b : agg.nodes) {
      if (a == b) continue;
      if (reach.count(model.node_index(b))) cert.holds = false;
    }
  }
  return cert;
}

inline Assumption1Certificate check_assumption1(const Scm& model, const AggregationSpec& agg) {
  return std::visit([&](const auto& m) { return check_assumption1(m, agg); }, model);
}

// ---------------------------------------------------------------------------
// Amalgamated graph: micro DAG plus macro nodes, with a bidirected link
// between every aggregated micro node and its macro node.
// ---------------------------------------------------------------------------
struct AmalgamatedGraph {
  std::vector<std::string> micro_nodes;
  std::vector<std::string> macro_nodes;
  std::vector<std::pair<std::string, std::string>> edges;  // directed, micro-level
  std::vector<std::pair<std::string, std::string>> links;  // micro <-> macro
};

template <class Model>
AmalgamatedGraph build_amalgamated(const Model& model, const std::vector<AggregationSpec>& aggs) {
  AmalgamatedGraph g;
  for (const auto& n : model.nodes) g.micro_nodes.push_back(n.name);
  for (const auto& e : model.edges) g.edges.push_back({e.from, e.to});
  std::set<std::string> used;
  for (const auto& agg : aggs) {
    for (const auto& n : agg.nodes)
      if (!used.insert(n).second)
        throw std::invalid_argument("build_amalgamated: node '" + n + "' aggregated twice");
    if (!check_assumption1(model, agg).holds)
      throw std::invalid_argument("build_amalgamated: aggregation '" + agg.macro_name +
                                  "' violates the no-directed-paths assumption");
    g.macro_nodes.push_back(agg.macro_name);
    for (const auto& n : agg.nodes) g.links.push_back({n, agg.macro_name});
  }
  return g;
}

inline AmalgamatedGraph build_amalgamated(const Scm& model, const std::vector<AggregationSpec>& aggs) {
  return std::visit([&](const auto& m) { return build_amalgamated(m, aggs); }, model);
}

// Post-intervention graph of do(Xbar): adds Xbar -> X, drops every micro
// parent of X and the link X <-> Xbar.
struct MacroInterventionGraph {
  std::vector<std::string> micro_nodes;
  std::vector<std::string> macro_nodes;
  std::vector<std::pair<std::string, std::string>> edges;  // includes Xbar -> X
  std::vector<std::pair<std::string, std::string>> links;
};

inline MacroInterventionGraph macro_intervention_graph(const AmalgamatedGraph& g,
                                                       const std::string& macro) {
  std::set<std::string> group;
  for (const auto& [micro, m] : g.links)
    if (m == macro) group.insert(micro);
  if (group.empty())
    throw std::invalid_argument("macro_intervention_graph: unknown macro '" + macro + "'");
  MacroInterventionGraph out;
  out.micro_nodes = g.micro_nodes;
  out.macro_nodes = g.macro_nodes;
  for (const auto& e : g.edges)
    if (!group.count(e.second)) out.edges.push_back(e);
  for (const auto& x : group) out.edges.push_back({macro, x});
  for (const auto& l : g.links)
    if (l.second != macro) out.links.push_back(l);
  return out;
}

// ---------------------------------------------------------------------------
// Micro-realizations of a macro intervention do(xbar): a distribution over
// micro states supported on the fiber pi^{-1}(xbar).
// ---------------------------------------------------------------------------
struct ExplicitGaussianRealization {
  VectorXd mean_offset;
  VectorXd mean_slope;  // mean(xbar) = mean_offset + mean_slope * xbar
  MatrixXd cov;
};

struct MicroRealization {
  enum class Family { Natural, Sequential, Deterministic, Explicit };
  std::string target;  // macro variable this realization implements
  Family family = Family::Natural;
  std::vector<int> order;  // sequential: observation order over group components
  VectorXd allocation;     // deterministic: micro allocation of one macro unit
  std::optional<ExplicitGaussianRealization> explicit_gaussian;
  std::map<int, VectorXd> explicit_discrete;  // macro category -> probs over source categories
  double support_tol = 1e-8;
};

namespace detail {

inline const AggregationSpec& agg_for(const std::vector<AggregationSpec>& aggs,
                                      const std::string& macro) {
  for (const auto& a : aggs)
    if (a.macro_name == macro) return a;
  throw std::invalid_argument("no aggregation produces macro '" + macro + "'");
}

}  // namespace detail

// Flat component indices of an aggregation group inside the model joint.
inline std::vector<int> group_components(const LinearGaussianScm& m, const AggregationSpec& agg) {
  std::vector<int> idx;
  for (const auto& name : agg.nodes) {
    const int off = m.offset_of(name);
    for (int c = 0; c < m.nodes[m.node_index(name)].dim; ++c) idx.push_back(off + c);
  }
  return idx;
}

inline std::vector<std::string> group_labels(const LinearGaussianScm& m,
                                             const AggregationSpec& agg) {
  std::vector<std::string> out;
  for (const auto& name : agg.nodes)
    for (const auto& l : m.labels_of(name)) out.push_back(l);
  return out;
}

// One functional row computing the macro variable from the full micro vector.
inline AffineFunctional agg_functional(const LinearGaussianScm& m, const AggregationSpec& agg) {
  if (agg.kind == AggregationSpec::Kind::Discrete)
    throw std::invalid_argument("agg_functional: discrete aggregation has no affine form");
  const auto idx = group_components(m, agg);
  const double scale = agg.kind == AggregationSpec::Kind::Mean ? 1.0 / idx.size() : 1.0;
  return AffineFunctional::sum_over(m.total_dim(), idx, scale);
}

// Aggregation weights over the group components only.
inline VectorXd agg_weights(const LinearGaussianScm& m, const AggregationSpec& agg) {
  const auto idx = group_components(m, agg);
  const double scale = agg.kind == AggregationSpec::Kind::Mean ? 1.0 / idx.size() : 1.0;
  return VectorXd::Constant(static_cast<Eigen::Index>(idx.size()), scale);
}

// Observational joint extended with one label per macro variable.
inline GaussianDist macro_joint(const LinearGaussianScm& m,
                                const std::vector<AggregationSpec>& aggs,
                                const std::optional<GaussianSurgery>& surgery = std::nullopt) {
  const GaussianDist micro = joint_moments(m, surgery);
  MatrixXd w = MatrixXd::Identity(micro.dim(), micro.dim());
  std::vector<std::string> labels = micro.labels;
  for (const auto& agg : aggs) {
    const AffineFunctional f = agg_functional(m, agg);
    w.conservativeResize(w.rows() + 1, Eigen::NoChange);
    w.row(w.rows() - 1) = f.weights.row(0);
    labels.push_back(agg.macro_name);
  }
  return push_forward(micro, AffineFunctional::linear(std::move(w)), std::move(labels));
}

// ---------------------------------------------------------------------------
// Realization evaluation: the distribution attached to do(xbar).
// ---------------------------------------------------------------------------
inline void check_support(const VectorXd& weights, const GaussianDist& r, double xbar,
                          double tol) {
  const double mean_gap = std::abs(weights.dot(r.mean) - xbar);
  const double var = weights.dot(r.cov * weights);
  if (mean_gap > tol || var > tol)
    throw std::invalid_argument("realization support violation: pi(x) != xbar (mean gap " +
                                std::to_string(mean_gap) + ", residual variance " +
                                std::to_string(var) + ")");
}

// Natural micro-realization P(X | Xbar = xbar), computed exactly.
inline GaussianDist natural_realization(const LinearGaussianScm& m, const AggregationSpec& agg,
                                        double xbar) {
  const GaussianDist joint = joint_moments(m);
  const AffineFunctional f = agg_functional(m, agg);
  VectorXd v(1);
  v << xbar;
  const GaussianDist cond = condition_on_functional(joint, f, v);
  return marginal(cond, group_labels(m, agg));
}

inline VectorXd natural_realization(const CategoricalScm& m, const AggregationSpec& agg,
                                    int xbar) {
  if (agg.kind != AggregationSpec::Kind::Discrete || agg.nodes.size() != 1)
    throw std::invalid_argument("natural_realization: categorical models need a discrete aggregation");
  const CategoricalDist joint = joint_table(m);
  const CategoricalDist node = marginalize(joint, {agg.nodes[0]});
  const auto pre = agg.table.preimage(xbar);
  double mass = 0.0;
  for (int s : pre) mass += node.probs[s];
  if (mass <= 1e-12)
    throw std::invalid_argument("natural_realization: zero-probability macro value");
  VectorXd out = VectorXd::Zero(node.probs.size());
  for (int s : pre) out[s] = node.probs[s] / mass;
  return out;
}

// Sequential realization (sum aggregation only): observe the components in
// `order` except the last and force the last to the residual xbar - sum.
inline GaussianDist sequential_realization(const LinearGaussianScm& m, const AggregationSpec& agg,
                                           const std::vector<int>& order, double xbar) {
  if (agg.kind != AggregationSpec::Kind::Sum)
    throw std::invalid_argument("sequential_realization: requires a sum aggregation");
  const auto idx = group_components(m, agg);
  const int k = static_cast<int>(idx.size());
  std::vector<int> ord = order;
  if (ord.empty())
    for (int i = 0; i < k; ++i) ord.push_back(i);
  if (static_cast<int>(ord.size()) != k)
    throw std::invalid_argument("sequential_realization: order must cover the group");
  std::vector<bool> seen(k, false);
  for (int o : ord) {
    if (o < 0 || o >= k || seen[o])
      throw std::invalid_argument("sequential_realization: order is not a permutation");
    seen[o] = true;
  }

  const GaussianDist joint = joint_moments(m);
  VectorXd mu(k);
  MatrixXd sig(k, k);
  for (int a = 0; a < k; ++a) {
    mu[a] = joint.mean[idx[a]];
    for (int b = 0; b < k; ++b) sig(a, b) = joint.cov(idx[a], idx[b]);
  }

  const int last = ord[k - 1];
  std::vector<int> observed(ord.begin(), ord.end() - 1);
  GaussianDist out;
  out.labels = group_labels(m, agg);
  out.mean = VectorXd::Zero(k);
  out.cov = MatrixXd::Zero(k, k);
  double obs_mean_sum = 0.0;
  for (int o : observed) {
    out.mean[o] = mu[o];
    obs_mean_sum += mu[o];
  }
  out.mean[last] = xbar - obs_mean_sum;
  for (int a : observed)
    for (int b : observed) out.cov(a, b) = sig(a, b);
  for (int a : observed) {
    double s = 0.0;
    for (int b : observed) s += sig(a, b);
    out.cov(a, last) = -s;
    out.cov(last, a) = -s;
  }
  double total = 0.0;
  for (int a : observed)
    for (int b : observed) total += sig(a, b);
  out.cov(last, last) = total;
  return out;
}

// Evaluates a realization family at xbar for a linear-Gaussian model,
// enforcing the support constraint pi(x) = xbar.
inline GaussianDist realization_dist(const LinearGaussianScm& m, const AggregationSpec& agg,
                                     const MicroRealization& r, double xbar) {
  GaussianDist out;
  switch (r.family) {
    case MicroRealization::Family::Natural:
      out = natural_realization(m, agg, xbar);
      break;
    case MicroRealization::Family::Sequential:
      out = sequential_realization(m, agg, r.order, xbar);
      break;
    case MicroRealization::Family::Deterministic: {
      const auto idx = group_components(m, agg);
      if (r.allocation.size() != static_cast<Eigen::Index>(idx.size()))
        throw std::invalid_argument("deterministic realization: allocation size mismatch");
      const VectorXd w = agg_weights(m, agg);
      if (std::abs(w.dot(r.allocation) - 1.0) > 1e-10)
        throw std::invalid_argument("deterministic realization: allocation does not sum to one");
      out.mean = r.allocation * xbar;
      out.cov = MatrixXd::Zero(idx.size(), idx.size());
      out.labels = group_labels(m, agg);
      break;
    }
    case MicroRealization::Family::Explicit: {
      if (!r.explicit_gaussian)
        throw std::invalid_argument("explicit realization: missing Gaussian parameterization");
      out.mean = r.explicit_gaussian->mean_offset + r.explicit_gaussian->mean_slope * xbar;
      out.cov = r.explicit_gaussian->cov;
      out.labels = group_labels(m, agg);
      break;
    }
  }
  check_support(agg_weights(m, agg), out, xbar, r.support_tol);
  return out;
}

inline VectorXd realization_dist(const CategoricalScm& m, const AggregationSpec& agg,
                                 const MicroRealization& r, int xbar) {
  VectorXd probs;
  switch (r.family) {
    case MicroRealization::Family::Natural:
      probs = natural_realization(m, agg, xbar);
      break;
    case MicroRealization::Family::Explicit: {
      const auto it = r.explicit_discrete.find(xbar);
      if (it == r.explicit_discrete.end())
        throw std::invalid_argument("explicit realization: no table entry for this macro value");
      probs = it->second;
      break;
    }
    default:
      throw std::invalid_argument("realization family not defined for categorical models");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-9 || probs.minCoeff() < -1e-12)
    throw std::invalid_argument("realization: invalid probability vector");
  for (Eigen::Index s = 0; s < probs.size(); ++s)
    if (probs[s] > r.support_tol && agg.table.table.at(static_cast<std::size_t>(s)) != xbar)
      throw std::invalid_argument("realization support violation: mass off the fiber of xbar");
  return probs;
}

// ---------------------------------------------------------------------------
// Macro-intervention semantics: replace the group's mechanism by the
// realization and propagate downstream exactly.
// ---------------------------------------------------------------------------
inline GaussianDist apply_macro_intervention(const LinearGaussianScm& m,
                                             const std::vector<AggregationSpec>& aggs,
                                             const MicroRealization& r, double xbar) {
  const AggregationSpec& agg = detail::agg_for(aggs, r.target);
  const GaussianDist dist = realization_dist(m, agg, r, xbar);
  const GaussianDist joint = macro_joint(m, aggs, GaussianSurgery{agg.nodes, dist});
  // The intervened macro variable must be a point mass at xbar.
  const int mi = joint.index_of(agg.macro_name);
  if (std::abs(joint.mean[mi] - xbar) > 1e-6 || joint.cov(mi, mi) > 1e-6)
    throw std::logic_error("apply_macro_intervention: intervened macro is not pinned at xbar");
  return joint;
}

// Post-intervention micro joint for categorical models (macro values are
// obtained by aggregating axes of the result).
inline CategoricalDist apply_macro_intervention(const CategoricalScm& m,
                                                const std::vector<AggregationSpec>& aggs,
                                                const MicroRealization& r, int xbar) {
  const AggregationSpec& agg = detail::agg_for(aggs, r.target);
  const VectorXd probs = realization_dist(m, agg, r, xbar);
  return joint_table(m, CategoricalSurgery{agg.nodes.at(0), probs});
}

// ---------------------------------------------------------------------------
// Consistency of aggregation under perfect micro-interventions: two
// interventions that map to the same macro-intervention must have the same
// downstream macro effect, otherwise no macro structural assignment exists.
// ---------------------------------------------------------------------------
struct MicroPointIntervention {
  std::string node;
  VectorXd value;
};

struct ConsistencyReport {
  bool consistent = true;
  int witness_a = -1, witness_b = -1;
  double effect_gap = 0.0;
  std::string detail;
};

inline ConsistencyReport consistency_check(const LinearGaussianScm& m,
                                           const std::vector<AggregationSpec>& aggs,
                                           const std::vector<MicroPointIntervention>& interventions,
                                           double tol = 1e-8) {
  struct Pushed {
    std::string node;
    double macro_value = 0.0;
    GaussianDist downstream;
  };
  std::vector<Pushed> pushed;
  for (const auto& iv : interventions) {
    GaussianDist point;
    point.mean = iv.value;
    point.cov = MatrixXd::Zero(iv.value.size(), iv.value.size());
    point.labels = m.labels_of(iv.node);
    const GaussianDist joint = macro_joint(m, aggs, GaussianSurgery{{iv.node}, point});
    Pushed p;
    p.node = iv.node;
    std::vector<std::string> downstream_macros;
    for (const auto& agg : aggs) {
      const bool own = std::find(agg.nodes.begin(), agg.nodes.end(), iv.node) != agg.nodes.end();
      if (own)
        p.macro_value = joint.mean[joint.index_of(agg.macro_name)];
      else
        downstream_macros.push_back(agg.macro_name);
    }
    p.downstream = marginal(joint, downstream_macros);
    pushed.push_back(std::move(p));
  }

  ConsistencyReport rep;
  for (std::size_t a = 0; a < pushed.size(); ++a) {
    for (std::size_t b = a + 1; b < pushed.size(); ++b) {
      if (pushed[a].node != pushed[b].node) continue;
      if (std::abs(pushed[a].macro_value - pushed[b].macro_value) > tol) continue;
      const double gap = gaussian_gap(pushed[a].downstream, pushed[b].downstream);
      if (gap > tol) {
        rep.consistent = false;
        rep.witness_a = static_cast<int>(a);
        rep.witness_b = static_cast<int>(b);
        rep.effect_gap = gap;
        rep.detail = "interventions " + std::to_string(a) + " and " + std::to_string(b) +
                     " share the macro value but differ downstream";
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace causalagg
