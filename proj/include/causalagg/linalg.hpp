#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <stdexcept>
#include <string>
#include <vector>

namespace causalagg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrized(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// Smallest eigenvalue of a symmetric matrix (0 for empty matrices).
inline double min_eigenvalue(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Moore-Penrose inverse of a symmetric PSD matrix, spectral cutoff relative
// to the largest eigenvalue. Degenerate (rank-deficient) covariances are
// first-class citizens throughout, so everything conditions through here.
inline MatrixXd pseudo_inverse_psd(const MatrixXd& a, double rel_cutoff = 1e-10,
                                   bool* rank_deficient = nullptr) {
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(a));
  const VectorXd& ev = es.eigenvalues();
  const double cutoff = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * rel_cutoff;
  VectorXd inv = VectorXd::Zero(ev.size());
  bool deficient = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff)
      inv[i] = 1.0 / ev[i];
    else
      deficient = true;
  }
  if (rank_deficient) *rank_deficient = deficient;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Square root of a symmetric PSD matrix with negative eigenvalues clamped to 0.
inline MatrixXd psd_sqrt(const MatrixXd& a) {
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(a));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Mixed-radix helper over an ordered list of cardinalities. Flat index runs
// with the LAST axis fastest; this matches the on-disk CPT row order.
class MixedRadix {
 public:
  explicit MixedRadix(std::vector<int> cards) : cards_(std::move(cards)) {
    size_ = 1;
    for (int c : cards_) {
      if (c < 1) throw std::invalid_argument("MixedRadix: cardinality < 1");
      size_ *= static_cast<std::size_t>(c);
    }
  }

  std::size_t size() const { return size_; }
  int axes() const { return static_cast<int>(cards_.size()); }
  const std::vector<int>& cards() const { return cards_; }

  std::size_t flat(const std::vector<int>& digits) const {
    if (digits.size() != cards_.size()) throw std::invalid_argument("MixedRadix: digit count");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < cards_.size(); ++k) {
      if (digits[k] < 0 || digits[k] >= cards_[k])
        throw std::out_of_range("MixedRadix: digit out of range");
      idx = idx * static_cast<std::size_t>(cards_[k]) + static_cast<std::size_t>(digits[k]);
    }
    return idx;
  }

  std::vector<int> digits(std::size_t flat_index) const {
    std::vector<int> d(cards_.size(), 0);
    for (std::size_t k = cards_.size(); k-- > 0;) {
      d[k] = static_cast<int>(flat_index % static_cast<std::size_t>(cards_[k]));
      flat_index /= static_cast<std::size_t>(cards_[k]);
    }
    return d;
  }

 private:
  std::vector<int> cards_;
  std::size_t size_ = 1;
};

}  // namespace causalagg
