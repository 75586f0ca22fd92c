#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalagg/aggregation.hpp"

namespace causalagg {

// Observational macro conditional P(effect | cause = xbar), exact.
inline GaussianDist observational_effect(const LinearGaussianScm& m,
                                         const std::vector<AggregationSpec>& aggs,
                                         const std::string& cause, const std::string& effect,
                                         double xbar) {
  const GaussianDist joint = macro_joint(m, aggs);
  const AffineFunctional f = agg_functional(m, detail::agg_for(aggs, cause));
  AffineFunctional full = AffineFunctional::linear(MatrixXd::Zero(1, joint.dim()));
  full.weights.leftCols(f.weights.cols()) = f.weights;
  VectorXd v(1);
  v << xbar;
  return marginal(condition_on_functional(joint, full, v), {effect});
}

inline CategoricalDist observational_effect(const CategoricalScm& m,
                                            const std::vector<AggregationSpec>& aggs,
                                            const std::string& cause, const std::string& effect,
                                            int xbar) {
  const AggregationSpec& ca = detail::agg_for(aggs, cause);
  const AggregationSpec& ea = detail::agg_for(aggs, effect);
  CategoricalDist joint = joint_table(m);
  joint = aggregate_axis(joint, ca.table, ca.macro_name);
  joint = aggregate_axis(joint, ea.table, ea.macro_name);
  joint = marginalize(joint, {ca.macro_name, ea.macro_name});
  return condition(joint, {{ca.macro_name, xbar}});
}

// Interventional macro distribution P(effect | do(cause := xbar)) under the
// given micro-realization.
inline GaussianDist interventional_effect(const LinearGaussianScm& m,
                                          const std::vector<AggregationSpec>& aggs,
                                          const MicroRealization& r, const std::string& effect,
                                          double xbar) {
  return marginal(apply_macro_intervention(m, aggs, r, xbar), {effect});
}

inline CategoricalDist interventional_effect(const CategoricalScm& m,
                                             const std::vector<AggregationSpec>& aggs,
                                             const MicroRealization& r, const std::string& effect,
                                             int xbar) {
  const AggregationSpec& ea = detail::agg_for(aggs, effect);
  CategoricalDist joint = apply_macro_intervention(m, aggs, r, xbar);
  joint = aggregate_axis(joint, ea.table, ea.macro_name);
  return marginalize(joint, {ea.macro_name});
}

// Default probe grid: mean of the cause macro plus/minus two of its standard
// deviations. Three points pin an affine mean and a constant variance, which
// is all the homoscedastic Gaussian family has.
inline std::vector<double> default_grid(const LinearGaussianScm& m,
                                        const std::vector<AggregationSpec>& aggs,
                                        const std::string& cause) {
  const GaussianDist joint = macro_joint(m, aggs);
  const int i = joint.index_of(cause);
  const double mu = joint.mean[i];
  const double sd = std::sqrt(std::max(joint.cov(i, i), 0.0));
  return {mu - 2.0 * sd, mu, mu + 2.0 * sd};
}

inline std::vector<int> default_grid(const CategoricalScm& m,
                                     const std::vector<AggregationSpec>& aggs,
                                     const std::string& cause) {
  const AggregationSpec& ca = detail::agg_for(aggs, cause);
  CategoricalDist node = marginalize(joint_table(m), {ca.nodes.at(0)});
  node = aggregate_axis(node, ca.table, ca.macro_name);
  std::vector<int> grid;
  for (Eigen::Index c = 0; c < node.probs.size(); ++c)
    if (node.probs[c] > 1e-12) grid.push_back(static_cast<int>(c));
  return grid;
}

// ---------------------------------------------------------------------------
// Macro-confounding classification: compare P(effect | xbar) with
// P(effect | do(xbar)) across the probe grid.
// ---------------------------------------------------------------------------
struct ConfoundingEntry {
  double xbar = 0.0;  // category index for categorical models
  double discrepancy = 0.0;
  double obs_mean = 0.0, obs_var = 0.0, do_mean = 0.0, do_var = 0.0;  // Gaussian summaries
  VectorXd obs_probs, do_probs;                                       // categorical summaries
};

enum class ConfoundingVerdict { Inhibiting, Inducing };

struct ConfoundingReport {
  std::string cause, effect;
  std::vector<ConfoundingEntry> entries;
  double max_discrepancy = 0.0;
  double tol = 1e-8;
  ConfoundingVerdict verdict = ConfoundingVerdict::Inhibiting;

  void finalize() {
    max_discrepancy = 0.0;
    for (const auto& e : entries) max_discrepancy = std::max(max_discrepancy, e.discrepancy);
    verdict = max_discrepancy <= tol ? ConfoundingVerdict::Inhibiting
                                     : ConfoundingVerdict::Inducing;
  }
};

inline ConfoundingReport classify_realization(const LinearGaussianScm& m,
                                              const std::vector<AggregationSpec>& aggs,
                                              const MicroRealization& r,
                                              const std::string& effect,
                                              std::vector<double> grid = {}, double tol = 1e-8) {
  if (grid.empty()) grid = default_grid(m, aggs, r.target);
  ConfoundingReport rep;
  rep.cause = r.target;
  rep.effect = effect;
  rep.tol = tol;
  for (double xbar : grid) {
    const GaussianDist obs = observational_effect(m, aggs, r.target, effect, xbar);
    const GaussianDist post = interventional_effect(m, aggs, r, effect, xbar);
    ConfoundingEntry e;
    e.xbar = xbar;
    e.obs_mean = obs.mean[0];
    e.obs_var = obs.cov(0, 0);
    e.do_mean = post.mean[0];
    e.do_var = post.cov(0, 0);
    e.discrepancy = gaussian_gap(obs, post);
    rep.entries.push_back(std::move(e));
  }
  rep.finalize();
  return rep;
}

inline ConfoundingReport classify_realization(const CategoricalScm& m,
                                              const std::vector<AggregationSpec>& aggs,
                                              const MicroRealization& r,
                                              const std::string& effect,
                                              std::vector<int> grid = {}, double tol = 1e-8) {
  if (grid.empty()) grid = default_grid(m, aggs, r.target);
  ConfoundingReport rep;
  rep.cause = r.target;
  rep.effect = effect;
  rep.tol = tol;
  for (int xbar : grid) {
    const CategoricalDist obs = observational_effect(m, aggs, r.target, effect, xbar);
    const CategoricalDist post = interventional_effect(m, aggs, r, effect, xbar);
    ConfoundingEntry e;
    e.xbar = xbar;
    e.obs_probs = obs.probs;
    e.do_probs = post.probs;
    e.discrepancy = total_variation(obs, post);
    rep.entries.push_back(std::move(e));
  }
  rep.finalize();
  return rep;
}

// ---------------------------------------------------------------------------
// Representability: a deterministic do-distribution combined with a
// non-degenerate observational conditional rules out any macro structural
// assignment effect := g(cause) that explains both.
// ---------------------------------------------------------------------------
struct RepresentabilityReport {
  std::vector<double> grid;
  std::vector<bool> deterministic_do;
  std::vector<bool> stochastic_observational;
  bool representable = true;
};

inline RepresentabilityReport check_representability(const LinearGaussianScm& m,
                                                     const std::vector<AggregationSpec>& aggs,
                                                     const MicroRealization& r,
                                                     const std::string& effect,
                                                     std::vector<double> grid = {}) {
  if (grid.empty()) grid = default_grid(m, aggs, r.target);
  RepresentabilityReport rep;
  for (double xbar : grid) {
    const GaussianDist obs = observational_effect(m, aggs, r.target, effect, xbar);
    const GaussianDist post = interventional_effect(m, aggs, r, effect, xbar);
    const bool det = post.cov(0, 0) <= 1e-10;
    const bool stoch = obs.cov(0, 0) > 1e-10;
    rep.grid.push_back(xbar);
    rep.deterministic_do.push_back(det);
    rep.stochastic_observational.push_back(stoch);
    if (det && stoch) rep.representable = false;
  }
  return rep;
}

inline RepresentabilityReport check_representability(const CategoricalScm& m,
                                                     const std::vector<AggregationSpec>& aggs,
                                                     const MicroRealization& r,
                                                     const std::string& effect,
                                                     std::vector<int> grid = {}) {
  if (grid.empty()) grid = default_grid(m, aggs, r.target);
  RepresentabilityReport rep;
  for (int xbar : grid) {
    const CategoricalDist obs = observational_effect(m, aggs, r.target, effect, xbar);
    const CategoricalDist post = interventional_effect(m, aggs, r, effect, xbar);
    const bool det = post.probs.maxCoeff() >= 1.0 - 1e-12;
    const bool stoch = obs.probs.maxCoeff() < 1.0 - 1e-12;
    rep.grid.push_back(xbar);
    rep.deterministic_do.push_back(det);
    rep.stochastic_observational.push_back(stoch);
    if (det && stoch) rep.representable = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Effective macro structural equation effect = beta * cause + noise implied
// by a realization family, with the dependence of the implied noise on the
// cause made explicit.
// ---------------------------------------------------------------------------
struct StructuralEquationReport {
  double beta = 0.0;
  double noise_mean = 0.0;
  double noise_var = 0.0;
  double noise_cov_with_cause = 0.0;
  bool noise_independent = false;
};

inline StructuralEquationReport structural_equation_report(
    const LinearGaussianScm& m, const std::vector<AggregationSpec>& aggs,
    const MicroRealization& r, const std::string& effect, double tol = 1e-8) {
  const AggregationSpec& cause_agg = detail::agg_for(aggs, r.target);
  const AggregationSpec& effect_agg = detail::agg_for(aggs, effect);
  if (cause_agg.kind != AggregationSpec::Kind::Sum ||
      effect_agg.kind != AggregationSpec::Kind::Sum)
    throw std::invalid_argument("structural_equation_report: requires sum aggregations");

  const std::vector<double> grid = default_grid(m, aggs, r.target);
  const double x0 = grid.front(), x1 = grid.back();
  const double e0 = interventional_effect(m, aggs, r, effect, x0).mean[0];
  const double e1 = interventional_effect(m, aggs, r, effect, x1).mean[0];

  StructuralEquationReport rep;
  rep.beta = (e1 - e0) / (x1 - x0);

  const GaussianDist joint = macro_joint(m, aggs);
  const int ix = joint.index_of(r.target);
  const int iy = joint.index_of(effect);
  rep.noise_mean = joint.mean[iy] - rep.beta * joint.mean[ix];
  rep.noise_var = joint.cov(iy, iy) + rep.beta * rep.beta * joint.cov(ix, ix) -
                  2.0 * rep.beta * joint.cov(iy, ix);
  rep.noise_cov_with_cause = joint.cov(iy, ix) - rep.beta * joint.cov(ix, ix);
  const double scale = std::max({1.0, std::abs(joint.cov(iy, ix)), joint.cov(ix, ix)});
  rep.noise_independent = std::abs(rep.noise_cov_with_cause) <= tol * scale;
  return rep;
}

}  // namespace causalagg
