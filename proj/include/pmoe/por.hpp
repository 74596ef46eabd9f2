#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmoe/param.hpp"
#include "pmoe/rng.hpp"

namespace pmoe::por {

/// Per-objective gradients: shared[k] = d L_k / d theta_sh (all the same
/// length), specific[k] = d L_k / d theta_k.
struct GradientBundle {
  std::vector<std::vector<double>> shared;
  std::vector<std::vector<double>> specific;

  std::size_t objectives() const noexcept { return shared.size(); }
};

/// Symmetric K x K matrix of pairwise inner products of shared gradients.
class GramMatrix {
 public:
  GramMatrix() = default;
  explicit GramMatrix(std::size_t k) : k_(k), m_(k * k, 0.0) {}
  // Row-major entries; throws DimensionError unless entries.size() == k * k.
  GramMatrix(std::size_t k, std::vector<double> entries);

  static GramMatrix identity(std::size_t k);
  static GramMatrix diagonal(std::vector<double> diag);

  std::size_t size() const noexcept { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return m_[i * k_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return m_[i * k_ + j]; }
  std::span<const double> entries() const noexcept { return m_; }

  double trace() const noexcept;
  bool all_finite() const noexcept;
  bool is_zero() const noexcept;
  GramMatrix scaled(double factor) const;
  // Smallest eigenvalue (symmetric eigen-solve).
  double min_eigenvalue() const;
  // Symmetric and min eigenvalue >= -1e-9 * trace.
  bool is_psd() const;

  // (M w)_i
  std::vector<double> times(std::span<const double> w) const;

 private:
  std::size_t k_ = 0;
  std::vector<double> m_;
};

/// Weights w_k >= 0 summing to one.
class SimplexWeights {
 public:
  SimplexWeights() = default;
  // Throws DomainError unless on the simplex (|sum - 1| <= 1e-12).
  explicit SimplexWeights(std::vector<double> w);
  static SimplexWeights uniform(std::size_t k);
  static SimplexWeights vertex(std::size_t k, std::size_t i);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }

  friend bool operator==(const SimplexWeights&, const SimplexWeights&) = default;

 private:
  std::vector<double> w_;
};

bool on_simplex(std::span<const double> w, double tol = 1e-12);

enum class StepMode {
  exact_line_search,  // v* minimizes the quadratic along the segment
  fixed_decay,        // v = 2 / (r + 2)
};

struct FWConfig {
  std::size_t max_iterations = 100;  // R
  double v_tol = 1e-4;
  StepMode step_mode = StepMode::exact_line_search;

  void validate() const;
};

struct FWIteration {
  std::size_t r = 0;
  std::vector<double> w;                // w^(r)
  double objective = 0.0;               // w^T M w
  double gap = 0.0;                     // duality gap at w^(r)
  std::optional<std::size_t> vertex;    // vertex chosen from w^(r); unset for the final iterate
  double step = 0.0;                    // v taken from w^(r)
};

struct FWDiagnostics {
  std::vector<FWIteration> iterations;
  bool converged = false;  // stopped on v* <= v_tol rather than on R
};

struct FWResult {
  SimplexWeights weights;
  FWDiagnostics diagnostics;
};

GramMatrix gram_matrix(const GradientBundle& bundle);
GramMatrix gram_matrix(std::span<const std::vector<double>> gradients);

// Minimizer over w in [0, 1] of ||w l1 + (1 - w) l2||^2 from the Gram entries.
double closed_form_two(double l1l1, double l1l2, double l2l2);

// Frank-Wolfe on min_w w^T M w over the simplex, started from uniform weights.
FWResult frank_wolfe(const GramMatrix& m, const FWConfig& config = {});

// w^T M w, the squared norm of sum_k w_k g_k.
double quadratic_value(const GramMatrix& m, std::span<const double> w);
double pareto_stationarity_residual(const GramMatrix& m, const SimplexWeights& w);

// max_s <w - s, grad L(w)> with grad L(w) = 2 M w.
double duality_gap(const GramMatrix& m, std::span<const double> w);

// 2 * max_{i,j} (e_i - e_j)^T M (e_i - e_j): curvature constant of w^T M w on the simplex.
double curvature_constant_quadratic(const GramMatrix& m);

inline constexpr double kGapBeta = 27.0 / 8.0;

struct BoundReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // min over checks of (bound - observed); negative means violated
  double curvature = 0.0;
  double optimum = 0.0;       // oracle value of min w^T M w
  bool passed() const noexcept { return violations == 0; }
};

// L(w^(r)) - L(w*) <= 2 C_f (1 + delta) / (r + 2) for r = 1..R, fixed-decay steps.
BoundReport verify_primal_bound(const GramMatrix& m, std::size_t iterations, double delta = 0.0);
// min_{1 <= r <= R} gap(w^(r)) <= 2 beta C_f (1 + delta) / (R + 2), fixed-decay steps.
BoundReport verify_gap_bound(const GramMatrix& m, std::size_t iterations, double delta = 0.0);
// L(w^(r+1)) <= L(w^(r)) - v gap(w^(r)) + v^2 / 2 C_f (1 + delta) at every recorded step.
BoundReport verify_descent_lemma(const GramMatrix& m, const FWDiagnostics& diagnostics, double delta = 0.0);

// theta_k -= lr * d L_k / d theta_k;  theta_sh -= lr * sum_k w_k d L_k / d theta_sh.
void apply_updates(ParamPartition& partition, const GradientBundle& bundle, const SimplexWeights& w,
                   double learning_rate);

// Row-oriented export: r, objective, gap, vertex, step, w_1..w_K (tab separated, header line).
std::string diagnostics_to_tsv(const FWDiagnostics& diagnostics);

// Independent reference minimizer of w^T M w on the simplex.
struct OracleResult {
  std::vector<double> w;
  double objective = 0.0;
};

std::vector<double> project_to_simplex(std::span<const double> v);
// Exhaustive grid with spacing 1/divisions.
OracleResult simplex_grid_search(const GramMatrix& m, std::size_t divisions);
// Accelerated projected gradient from a starting point.
OracleResult projected_gradient(const GramMatrix& m, std::span<const double> start, std::size_t max_iterations = 20000);
// Grid (1e-3 for K = 2, 1e-2 for K = 3, 0.1 for K = 4, 5) refined by projected gradient.
OracleResult min_norm_oracle(const GramMatrix& m);

// A A^T / trace for a K x (K + extra) standard normal A: PSD with unit trace.
GramMatrix random_gram(SeededRng& rng, std::size_t k, std::size_t extra_columns = 2);

}  // namespace pmoe::por
