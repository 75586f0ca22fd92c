#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalagg/linalg.hpp"

namespace causalagg {

// Coarsening of one categorical variable: a surjective, non-injective map
// from source categories to macro categories.
struct DiscreteAggregation {
  std::string source;
  std::vector<int> table;  // table[source category] = macro category
  int macro_cardinality = 0;

  void check() const {
    if (macro_cardinality < 1) throw std::invalid_argument("DiscreteAggregation: empty range");
    std::vector<bool> hit(macro_cardinality, false);
    for (int m : table) {
      if (m < 0 || m >= macro_cardinality)
        throw std::invalid_argument("DiscreteAggregation: category out of range");
      hit[m] = true;
    }
    if (!std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }))
      throw std::invalid_argument("DiscreteAggregation: map not surjective");
    if (macro_cardinality >= static_cast<int>(table.size()))
      throw std::invalid_argument("DiscreteAggregation: map must be non-injective");
  }

  std::vector<int> preimage(int macro_cat) const {
    std::vector<int> pre;
    for (std::size_t s = 0; s < table.size(); ++s)
      if (table[s] == macro_cat) pre.push_back(static_cast<int>(s));
    return pre;
  }
};

// Exact finite distribution over named axes. probs is flat in mixed-radix
// order, last axis fastest -- identical to the CPT file order.
struct CategoricalDist {
  std::vector<std::pair<std::string, int>> axes;  // (label, cardinality)
  VectorXd probs;

  int axis_of(const std::string& label) const {
    for (std::size_t i = 0; i < axes.size(); ++i)
      if (axes[i].first == label) return static_cast<int>(i);
    throw std::invalid_argument("CategoricalDist: unknown label '" + label + "'");
  }

  MixedRadix radix() const {
    std::vector<int> cards;
    for (const auto& a : axes) cards.push_back(a.second);
    return MixedRadix(cards);
  }

  void check(double tol = 1e-12) const {
    const MixedRadix mr = radix();
    if (static_cast<std::size_t>(probs.size()) != mr.size())
      throw std::invalid_argument("CategoricalDist: probs length mismatch");
    if (probs.minCoeff() < -tol) throw std::invalid_argument("CategoricalDist: negative probability");
    if (std::abs(probs.sum() - 1.0) > tol)
      throw std::invalid_argument("CategoricalDist: probabilities do not sum to 1");
  }
};

inline double total_variation(const CategoricalDist& a, const CategoricalDist& b) {
  if (a.probs.size() != b.probs.size())
    throw std::invalid_argument("total_variation: size mismatch");
  return 0.5 * (a.probs - b.probs).cwiseAbs().sum();
}

inline CategoricalDist marginalize(const CategoricalDist& dist,
                                   const std::vector<std::string>& keep) {
  std::vector<int> keep_axes;
  for (const auto& l : keep) keep_axes.push_back(dist.axis_of(l));

  CategoricalDist out;
  for (int k : keep_axes) out.axes.push_back(dist.axes[k]);
  const MixedRadix src = dist.radix();
  const MixedRadix dst = out.radix();
  out.probs = VectorXd::Zero(static_cast<Eigen::Index>(dst.size()));
  std::vector<int> sub(keep_axes.size());
  for (std::size_t f = 0; f < src.size(); ++f) {
    const std::vector<int> d = src.digits(f);
    for (std::size_t k = 0; k < keep_axes.size(); ++k) sub[k] = d[keep_axes[k]];
    out.probs[static_cast<Eigen::Index>(dst.flat(sub))] += dist.probs[static_cast<Eigen::Index>(f)];
  }
  return out;
}

// Exact Bayes conditioning on label -> category evidence; evidence axes are
// removed from the result.
inline CategoricalDist condition(const CategoricalDist& dist,
                                 const std::map<std::string, int>& evidence) {
  std::vector<int> fixed_axis, fixed_cat;
  for (const auto& [label, cat] : evidence) {
    const int ax = dist.axis_of(label);
    if (cat < 0 || cat >= dist.axes[ax].second)
      throw std::invalid_argument("condition: category out of range for '" + label + "'");
    fixed_axis.push_back(ax);
    fixed_cat.push_back(cat);
  }

  CategoricalDist out;
  for (std::size_t i = 0; i < dist.axes.size(); ++i)
    if (std::find(fixed_axis.begin(), fixed_axis.end(), static_cast<int>(i)) == fixed_axis.end())
      out.axes.push_back(dist.axes[i]);
  const MixedRadix src = dist.radix();
  const MixedRadix dst = out.radix();
  out.probs = VectorXd::Zero(static_cast<Eigen::Index>(dst.size()));

  double mass = 0.0;
  std::vector<int> sub;
  sub.reserve(out.axes.size());
  for (std::size_t f = 0; f < src.size(); ++f) {
    const std::vector<int> d = src.digits(f);
    bool match = true;
    for (std::size_t k = 0; k < fixed_axis.size(); ++k)
      if (d[fixed_axis[k]] != fixed_cat[k]) { match = false; break; }
    if (!match) continue;
    sub.clear();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::find(fixed_axis.begin(), fixed_axis.end(), static_cast<int>(i)) == fixed_axis.end())
        sub.push_back(d[i]);
    const double p = dist.probs[static_cast<Eigen::Index>(f)];
    mass += p;
    out.probs[static_cast<Eigen::Index>(dst.flat(sub))] += p;
  }
  if (mass <= 1e-12) throw std::invalid_argument("condition: zero-probability evidence");
  out.probs /= mass;
  return out;
}

// Replaces one axis by its aggregated (macro) version, summing probabilities
// over each preimage.
inline CategoricalDist aggregate_axis(const CategoricalDist& dist, const DiscreteAggregation& agg,
                                      const std::string& macro_label) {
  const int ax = dist.axis_of(agg.source);
  if (static_cast<int>(agg.table.size()) != dist.axes[ax].second)
    throw std::invalid_argument("aggregate_axis: table size does not match source cardinality");

  CategoricalDist out;
  out.axes = dist.axes;
  out.axes[ax] = {macro_label, agg.macro_cardinality};
  const MixedRadix src = dist.radix();
  const MixedRadix dst = out.radix();
  out.probs = VectorXd::Zero(static_cast<Eigen::Index>(dst.size()));
  for (std::size_t f = 0; f < src.size(); ++f) {
    std::vector<int> d = src.digits(f);
    d[ax] = agg.table[d[ax]];
    out.probs[static_cast<Eigen::Index>(dst.flat(d))] += dist.probs[static_cast<Eigen::Index>(f)];
  }
  return out;
}

}  // namespace causalagg
