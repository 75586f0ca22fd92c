#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalagg/linalg.hpp"
#include "causalagg/rng.hpp"

namespace causalagg {

// Exact multivariate Gaussian with named components. Covariances may be
// singular: macro-interventions concentrate mass on the hyperplane
// sum(x) = xbar, so rank deficiency is the normal case, not an error.
struct GaussianDist {
  VectorXd mean;
  MatrixXd cov;
  std::vector<std::string> labels;

  Eigen::Index dim() const { return mean.size(); }

  int index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    throw std::invalid_argument("GaussianDist: unknown label '" + label + "'");
  }

  void check() const {
    if (cov.rows() != dim() || cov.cols() != dim())
      throw std::invalid_argument("GaussianDist: cov shape mismatch");
    if (static_cast<Eigen::Index>(labels.size()) != dim())
      throw std::invalid_argument("GaussianDist: label count mismatch");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("GaussianDist: cov not symmetric");
    if (min_eigenvalue(cov) < -1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("GaussianDist: cov not PSD");
  }
};

// y = weights * x + offset. Rows are output components.
struct AffineFunctional {
  MatrixXd weights;
  VectorXd offset;

  static AffineFunctional linear(MatrixXd w) {
    AffineFunctional f;
    f.offset = VectorXd::Zero(w.rows());
    f.weights = std::move(w);
    return f;
  }

  // Single row selecting one component.
  static AffineFunctional selector(Eigen::Index dim, Eigen::Index component) {
    MatrixXd w = MatrixXd::Zero(1, dim);
    w(0, component) = 1.0;
    return linear(std::move(w));
  }

  // Single row summing a set of components.
  static AffineFunctional sum_over(Eigen::Index dim, const std::vector<int>& components,
                                   double scale = 1.0) {
    MatrixXd w = MatrixXd::Zero(1, dim);
    for (int c : components) w(0, c) = scale;
    return linear(std::move(w));
  }

  static AffineFunctional stack(const AffineFunctional& a, const AffineFunctional& b) {
    if (a.weights.cols() != b.weights.cols())
      throw std::invalid_argument("AffineFunctional::stack: input dims differ");
    AffineFunctional f;
    f.weights.resize(a.weights.rows() + b.weights.rows(), a.weights.cols());
    f.weights << a.weights, b.weights;
    f.offset.resize(a.offset.size() + b.offset.size());
    f.offset << a.offset, b.offset;
    return f;
  }
};

inline GaussianDist push_forward(const GaussianDist& dist, const AffineFunctional& f,
                                 std::vector<std::string> labels = {}) {
  if (f.weights.cols() != dist.dim())
    throw std::invalid_argument("push_forward: dimension mismatch");
  GaussianDist out;
  out.mean = f.weights * dist.mean + f.offset;
  out.cov = symmetrized(f.weights * dist.cov * f.weights.transpose());
  if (labels.empty())
    for (Eigen::Index i = 0; i < out.mean.size(); ++i) labels.push_back("f" + std::to_string(i));
  out.labels = std::move(labels);
  return out;
}

// Exact conditional of `dist` given weights*x + offset = value. Uses the
// pseudo-inverse on the constraint covariance, so conditioning on degenerate
// functionals (including repeated constraints) is well defined as long as
// `value` lies in the support.
inline GaussianDist condition_on_functional(const GaussianDist& dist, const AffineFunctional& f,
                                            const VectorXd& value) {
  if (f.weights.cols() != dist.dim())
    throw std::invalid_argument("condition_on_functional: dimension mismatch");
  if (value.size() != f.weights.rows())
    throw std::invalid_argument("condition_on_functional: value size mismatch");
  const MatrixXd cross = dist.cov * f.weights.transpose();        // d x k
  const MatrixXd s = symmetrized(f.weights * cross);              // k x k
  const MatrixXd gain = cross * pseudo_inverse_psd(s);            // d x k
  GaussianDist out;
  out.mean = dist.mean + gain * (value - f.weights * dist.mean - f.offset);
  out.cov = symmetrized(dist.cov - gain * cross.transpose());
  out.labels = dist.labels;
  return out;
}

inline GaussianDist marginal(const GaussianDist& dist, const std::vector<std::string>& labels) {
  MatrixXd w = MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), dist.dim());
  for (std::size_t i = 0; i < labels.size(); ++i) w(static_cast<Eigen::Index>(i), dist.index_of(labels[i])) = 1.0;
  return push_forward(dist, AffineFunctional::linear(std::move(w)), labels);
}

inline double regression_coefficient(const GaussianDist& joint, const std::string& y,
                                     const std::string& x) {
  const int iy = joint.index_of(y);
  const int ix = joint.index_of(x);
  const double var_x = joint.cov(ix, ix);
  if (var_x <= 0.0) throw std::invalid_argument("regression_coefficient: zero-variance regressor");
  return joint.cov(iy, ix) / var_x;
}

struct ConditionalIndependenceResult {
  bool independent = false;
  double max_abs_partial_cov = 0.0;
  bool singular_conditioning = false;  // pseudo-inverse dropped directions
};

// Tests a _||_ b | given by the partial covariance block; for jointly
// Gaussian variables zero partial covariance is equivalent to conditional
// independence.
inline ConditionalIndependenceResult conditional_independent(const GaussianDist& joint,
                                                             const std::vector<std::string>& a,
                                                             const std::vector<std::string>& b,
                                                             const std::vector<std::string>& given,
                                                             double tol = 1e-8) {
  std::vector<int> ia, ib, ic;
  for (const auto& l : a) ia.push_back(joint.index_of(l));
  for (const auto& l : b) ib.push_back(joint.index_of(l));
  for (const auto& l : given) ic.push_back(joint.index_of(l));

  auto block = [&](const std::vector<int>& rows, const std::vector<int>& cols) {
    MatrixXd m(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = joint.cov(rows[i], cols[j]);
    return m;
  };

  ConditionalIndependenceResult res;
  MatrixXd partial = block(ia, ib);
  if (!ic.empty()) {
    const MatrixXd scc = block(ic, ic);
    const MatrixXd inv = pseudo_inverse_psd(scc, 1e-10, &res.singular_conditioning);
    partial -= block(ia, ic) * inv * block(ic, ib);
  }
  res.max_abs_partial_cov = partial.size() == 0 ? 0.0 : partial.cwiseAbs().maxCoeff();
  res.independent = res.max_abs_partial_cov < tol;
  return res;
}

// Operational distribution equality for the Gaussian family: means compared
// relative to scale, covariances entrywise.
inline double gaussian_gap(const GaussianDist& a, const GaussianDist& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("gaussian_gap: dimension mismatch");
  double gap = 0.0;
  for (Eigen::Index i = 0; i < a.dim(); ++i) {
    const double scale = std::max({1.0, std::abs(a.mean[i]), std::abs(b.mean[i])});
    gap = std::max(gap, std::abs(a.mean[i] - b.mean[i]) / scale);
  }
  if (a.dim() > 0) gap = std::max(gap, (a.cov - b.cov).cwiseAbs().maxCoeff());
  return gap;
}

inline bool is_degenerate(const GaussianDist& d, double tol = 1e-10) {
  return d.dim() == 0 || d.cov.cwiseAbs().maxCoeff() <= tol;
}

// Draws n samples (rows) from the distribution; works for singular
// covariances through the spectral square root.
inline MatrixXd sample_gaussian(const GaussianDist& d, int n, Rng& rng) {
  const MatrixXd root = psd_sqrt(d.cov);
  MatrixXd out(n, d.dim());
  VectorXd z(d.dim());
  for (int r = 0; r < n; ++r) {
    for (Eigen::Index i = 0; i < d.dim(); ++i) z[i] = rng.normal();
    out.row(r) = (d.mean + root * z).transpose();
  }
  return out;
}

}  // namespace causalagg
