#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>

#include "pmoe/errors.hpp"
#include "pmoe/por.hpp"

namespace pmoe::por {

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw DomainError("project_to_simplex: empty vector");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
    if (sorted[i] - t > 0.0) threshold = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - threshold, 0.0);
  return out;
}

OracleResult simplex_grid_search(const GramMatrix& m, std::size_t divisions) {
  const std::size_t k = m.size();
  if (k == 0) throw DomainError("simplex_grid_search: no objectives");
  if (divisions == 0) throw DomainError("simplex_grid_search: divisions must be positive");
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> counts(k, 0);
  std::vector<double> w(k);
  const double h = 1.0 / static_cast<double>(divisions);

  std::function<void(std::size_t, std::size_t)> visit = [&](std::size_t axis, std::size_t remaining) {
    if (axis + 1 == k) {
      counts[axis] = remaining;
      for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(counts[i]) * h;
      const double value = quadratic_value(m, w);
      if (value < best.objective) {
        best.objective = value;
        best.w = w;
      }
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[axis] = c;
      visit(axis + 1, remaining - c);
    }
  };
  visit(0, divisions);
  return best;
}

OracleResult projected_gradient(const GramMatrix& m, std::span<const double> start, std::size_t max_iterations) {
  const std::size_t k = m.size();
  if (start.size() != k) throw DimensionError("projected_gradient: start point length");
  Eigen::MatrixXd a(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  const double largest = k == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly)
                                             .eigenvalues()
                                             .maxCoeff();
  std::vector<double> x = project_to_simplex(start);
  OracleResult best{x, quadratic_value(m, x)};
  if (largest <= 0.0) return best;
  // Lipschitz constant of grad(w^T M w) = 2 M.
  const double step = 1.0 / (2.0 * largest);

  std::vector<double> y = x, trial(k);
  double momentum = 1.0;
  double value = best.objective;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const std::vector<double> my = m.times(y);
    for (std::size_t i = 0; i < k; ++i) trial[i] = y[i] - step * 2.0 * my[i];
    std::vector<double> next = project_to_simplex(trial);
    const double next_value = quadratic_value(m, next);
    if (next_value > value) {
      // Restart momentum when the objective goes up.
      momentum = 1.0;
      y = x;
      continue;
    }
    double change = 0.0;
    for (std::size_t i = 0; i < k; ++i) change = std::max(change, std::abs(next[i] - x[i]));
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    for (std::size_t i = 0; i < k; ++i) y[i] = next[i] + (momentum - 1.0) / next_momentum * (next[i] - x[i]);
    momentum = next_momentum;
    x = std::move(next);
    value = next_value;
    if (value < best.objective) best = {x, value};
    if (change < 1e-15) break;
  }
  return best;
}

OracleResult min_norm_oracle(const GramMatrix& m) {
  const std::size_t k = m.size();
  if (k == 0) throw DomainError("min_norm_oracle: no objectives");
  if (k == 1) return {{1.0}, m(0, 0)};
  std::vector<double> start(k, 1.0 / static_cast<double>(k));
  OracleResult coarse{start, quadratic_value(m, start)};
  if (k <= 5) {
    const std::size_t divisions = k == 2 ? 1000 : k == 3 ? 100 : 10;
    coarse = simplex_grid_search(m, divisions);
  }
  OracleResult refined = projected_gradient(m, coarse.w);
  return refined.objective <= coarse.objective ? refined : coarse;
}


GramMatrix random_gram(SeededRng& rng, std::size_t k, std::size_t extra_columns) {
  if (k == 0) throw DomainError("random_gram: k must be >= 1");
  const std::size_t n = k + extra_columns;
  std::vector<double> a(k * n);
  for (double& v : a) v = rng.normal();
  GramMatrix m(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += a[i * n + c] * a[j * n + c];
      m(i, j) = m(j, i) = s;
    }
  return m.scaled(1.0 / m.trace());
}

}  // namespace pmoe::por
