#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include "pmoe/errors.hpp"
#include "pmoe/por.hpp"

namespace pmoe::por {

namespace {

std::size_t argmin_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

FWIteration record(const GramMatrix& m, std::size_t r, const std::vector<double>& w) {
  FWIteration it;
  it.r = r;
  it.w = w;
  it.objective = quadratic_value(m, w);
  it.gap = duality_gap(m, w);
  return it;
}

// Rounding slack for comparisons against the bounds.
double bound_slack(const GramMatrix& m) { return 1e-12 * std::max(1.0, std::abs(m.trace())); }

FWDiagnostics fixed_decay_run(const GramMatrix& m, std::size_t iterations) {
  FWConfig config;
  config.max_iterations = iterations;
  config.v_tol = std::numeric_limits<double>::min();
  config.step_mode = StepMode::fixed_decay;
  return frank_wolfe(m, config).diagnostics;
}

}  // namespace

void FWConfig::validate() const {
  if (max_iterations < 1) throw ConfigError("max_iterations", "must be >= 1");
  if (!(v_tol > 0.0)) throw ConfigError("v_tol", "must be > 0");
}

double closed_form_two(double l1l1, double l1l2, double l2l2) {
  if (l1l2 >= l1l1) return 1.0;
  if (l1l2 >= l2l2) return 0.0;
  const double denom = l1l1 - 2.0 * l1l2 + l2l2;
  // Unreachable: equal vectors take the first branch.
  assert(denom > 0.0);
  return std::clamp((l2l2 - l1l2) / denom, 0.0, 1.0);
}

double quadratic_value(const GramMatrix& m, std::span<const double> w) {
  const std::vector<double> mw = m.times(w);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w[i] * mw[i];
  return total;
}

double pareto_stationarity_residual(const GramMatrix& m, const SimplexWeights& w) {
  return quadratic_value(m, w.values());
}

double duality_gap(const GramMatrix& m, std::span<const double> w) {
  const std::vector<double> mw = m.times(w);
  double inner = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) inner += w[i] * 2.0 * mw[i];
  const double lowest = 2.0 * *std::min_element(mw.begin(), mw.end());
  return std::max(0.0, inner - lowest);
}

double curvature_constant_quadratic(const GramMatrix& m) {
  double widest = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j) widest = std::max(widest, m(i, i) - 2.0 * m(i, j) + m(j, j));
  return 2.0 * widest;
}

FWResult frank_wolfe(const GramMatrix& m, const FWConfig& config) {
  config.validate();
  const std::size_t k = m.size();
  if (k == 0) throw DomainError("frank_wolfe: no objectives");
  if (!m.all_finite()) throw DomainError("frank_wolfe: Gram matrix has non-finite entries");

  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  FWResult result;
  FWDiagnostics& diag = result.diagnostics;
  diag.iterations.push_back(record(m, 0, w));
  if (m.is_zero()) {
    // Every weight is optimal.
    diag.iterations.back().gap = 0.0;
    diag.converged = true;
    result.weights = SimplexWeights(std::move(w));
    return result;
  }

  for (std::size_t r = 0; r < config.max_iterations; ++r) {
    const std::vector<double> mw = m.times(w);
    const std::size_t vertex = argmin_lowest(mw);
    double step = 0.0;
    if (config.step_mode == StepMode::exact_line_search) {
      double wmw = 0.0;
      for (std::size_t i = 0; i < k; ++i) wmw += w[i] * mw[i];
      // No descent toward the vertex (w may already be it): the segment is flat, take v = 0.
      step = mw[vertex] >= wmw ? 0.0 : closed_form_two(m(vertex, vertex), mw[vertex], wmw);
    } else {
      step = 2.0 / (static_cast<double>(r) + 2.0);
    }
    diag.iterations.back().vertex = vertex;
    diag.iterations.back().step = step;

    for (std::size_t i = 0; i < k; ++i) w[i] *= (1.0 - step);
    w[vertex] += step;
    diag.iterations.push_back(record(m, r + 1, w));
    if (step <= config.v_tol) {
      diag.converged = true;
      break;
    }
  }

  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
  result.weights = SimplexWeights(std::move(w));
  return result;
}

BoundReport verify_primal_bound(const GramMatrix& m, std::size_t iterations, double delta) {
  BoundReport report;
  report.curvature = curvature_constant_quadratic(m);
  report.optimum = min_norm_oracle(m).objective;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const double slack = bound_slack(m);
  const FWDiagnostics diag = fixed_decay_run(m, iterations);
  for (const FWIteration& it : diag.iterations) {
    if (it.r < 1) continue;
    const double bound = 2.0 * report.curvature * (1.0 + delta) / (static_cast<double>(it.r) + 2.0);
    const double margin = bound - (it.objective - report.optimum);
    ++report.checked;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -slack) ++report.violations;
  }
  if (report.checked == 0) report.worst_margin = 0.0;
  return report;
}

BoundReport verify_gap_bound(const GramMatrix& m, std::size_t iterations, double delta) {
  if (iterations < 2) throw DomainError("verify_gap_bound: needs R >= 2");
  BoundReport report;
  report.curvature = curvature_constant_quadratic(m);
  const FWDiagnostics diag = fixed_decay_run(m, iterations);
  double smallest = std::numeric_limits<double>::infinity();
  for (const FWIteration& it : diag.iterations)
    if (it.r >= 1) smallest = std::min(smallest, it.gap);
  // Zero Gram matrix: the solver stops at w^(0) with gap 0.
  if (!std::isfinite(smallest)) smallest = diag.iterations.front().gap;
  const double bound = 2.0 * kGapBeta * report.curvature * (1.0 + delta) / (static_cast<double>(iterations) + 2.0);
  report.checked = 1;
  report.worst_margin = bound - smallest;
  if (report.worst_margin < -bound_slack(m)) report.violations = 1;
  return report;
}

BoundReport verify_descent_lemma(const GramMatrix& m, const FWDiagnostics& diagnostics, double delta) {
  BoundReport report;
  report.curvature = curvature_constant_quadratic(m);
  report.worst_margin = std::numeric_limits<double>::infinity();
  const double slack = bound_slack(m);
  const auto& its = diagnostics.iterations;
  for (std::size_t i = 0; i + 1 < its.size(); ++i) {
    const double gamma = its[i].step;
    const double bound = its[i].objective - gamma * its[i].gap + 0.5 * gamma * gamma * report.curvature * (1.0 + delta);
    const double margin = bound - its[i + 1].objective;
    ++report.checked;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -slack) ++report.violations;
  }
  if (report.checked == 0) report.worst_margin = 0.0;
  return report;
}

std::string diagnostics_to_tsv(const FWDiagnostics& diagnostics) {
  std::ostringstream out;
  out.precision(17);
  const std::size_t k = diagnostics.iterations.empty() ? 0 : diagnostics.iterations.front().w.size();
  out << "r\tobjective\tgap\tvertex\tstep";
  for (std::size_t i = 0; i < k; ++i) out << "\tw" << i + 1;
  out << '\n';
  for (const FWIteration& it : diagnostics.iterations) {
    out << it.r << '\t' << it.objective << '\t' << it.gap << '\t';
    if (it.vertex)
      out << *it.vertex + 1;
    else
      out << '-';
    out << '\t' << it.step;
    for (double v : it.w) out << '\t' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace pmoe::por
