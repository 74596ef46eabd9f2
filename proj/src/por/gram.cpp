#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "pmoe/errors.hpp"
#include "pmoe/por.hpp"

namespace pmoe::por {

GramMatrix::GramMatrix(std::size_t k, std::vector<double> entries) : k_(k), m_(std::move(entries)) {
  if (m_.size() != k * k) {
    throw DimensionError("Gram matrix of size " + std::to_string(k) + " needs " + std::to_string(k * k) +
                         " entries, got " + std::to_string(m_.size()));
  }
}

GramMatrix GramMatrix::identity(std::size_t k) {
  GramMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) m(i, i) = 1.0;
  return m;
}

GramMatrix GramMatrix::diagonal(std::vector<double> diag) {
  GramMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

double GramMatrix::trace() const noexcept {
  double t = 0.0;
  for (std::size_t i = 0; i < k_; ++i) t += (*this)(i, i);
  return t;
}

bool GramMatrix::all_finite() const noexcept {
  return std::all_of(m_.begin(), m_.end(), [](double v) { return std::isfinite(v); });
}

bool GramMatrix::is_zero() const noexcept {
  return std::all_of(m_.begin(), m_.end(), [](double v) { return v == 0.0; });
}

GramMatrix GramMatrix::scaled(double factor) const {
  GramMatrix out = *this;
  for (double& v : out.m_) v *= factor;
  return out;
}

double GramMatrix::min_eigenvalue() const {
  if (k_ == 0) return 0.0;
  Eigen::MatrixXd a(k_, k_);
  for (std::size_t i = 0; i < k_; ++i)
    for (std::size_t j = 0; j < k_; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*this)(i, j);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool GramMatrix::is_psd() const {
  for (std::size_t i = 0; i < k_; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return min_eigenvalue() >= -1e-9 * std::abs(trace());
}

std::vector<double> GramMatrix::times(std::span<const double> w) const {
  if (w.size() != k_) throw DimensionError("Gram product: weight length " + std::to_string(w.size()));
  std::vector<double> out(k_, 0.0);
  for (std::size_t i = 0; i < k_; ++i)
    for (std::size_t j = 0; j < k_; ++j) out[i] += (*this)(i, j) * w[j];
  return out;
}

bool on_simplex(std::span<const double> w, double tol) {
  if (w.empty()) return false;
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

SimplexWeights::SimplexWeights(std::vector<double> w) : w_(std::move(w)) {
  if (!on_simplex(w_)) throw DomainError("loss weights are not on the probability simplex");
}

SimplexWeights SimplexWeights::uniform(std::size_t k) {
  if (k == 0) throw DomainError("simplex of dimension 0");
  return SimplexWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

SimplexWeights SimplexWeights::vertex(std::size_t k, std::size_t i) {
  std::vector<double> w(k, 0.0);
  w.at(i) = 1.0;
  return SimplexWeights(std::move(w));
}

GramMatrix gram_matrix(std::span<const std::vector<double>> gradients) {
  const std::size_t k = gradients.size();
  GramMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (gradients[i].size() != gradients[0].size()) {
      throw DimensionError("shared gradient " + std::to_string(i + 1) + " has length " +
                           std::to_string(gradients[i].size()) + ", expected " + std::to_string(gradients[0].size()));
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const double dot = std::inner_product(gradients[i].begin(), gradients[i].end(), gradients[j].begin(), 0.0);
      m(i, j) = dot;
      m(j, i) = dot;
    }
  }
  return m;
}

GramMatrix gram_matrix(const GradientBundle& bundle) { return gram_matrix(bundle.shared); }

}  // namespace pmoe::por
