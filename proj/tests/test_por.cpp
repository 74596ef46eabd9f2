#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "pmoe/errors.hpp"
#include "pmoe/por.hpp"

using namespace pmoe;
using namespace pmoe::por;
using Catch::Matchers::WithinAbs;

namespace {

// Solves A x = b by Gaussian elimination with partial pivoting; false if singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-13) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= a[c][j] * x[j];
    x[c] = s / a[c][c];
  }
  return true;
}

// Enumerates supports S and solves the KKT system M_SS w_S = lambda 1, sum w_S = 1;
// keeps feasible candidates whose off-support entries satisfy (M w)_i >= lambda.
double kkt_minimum(const GramMatrix& m) {
  const std::size_t k = m.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < k; ++i)
      if (mask & (std::size_t{1} << i)) s.push_back(i);
    const std::size_t n = s.size();
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
    std::vector<double> b(n + 1, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a[r][c] = m(s[r], s[c]);
      a[r][n] = -1.0;
      a[n][r] = 1.0;
    }
    b[n] = 1.0;
    std::vector<double> sol;
    if (!solve_linear(a, b, sol)) continue;
    std::vector<double> w(k, 0.0);
    bool feasible = true;
    for (std::size_t r = 0; r < n; ++r) {
      if (sol[r] < -1e-12) feasible = false;
      w[s[r]] = std::max(0.0, sol[r]);
    }
    if (!feasible) continue;
    const std::vector<double> mw = m.times(w);
    for (std::size_t i = 0; i < k; ++i)
      if (!(mask & (std::size_t{1} << i)) && mw[i] < sol[n] - 1e-10) feasible = false;
    if (feasible) best = std::min(best, quadratic_value(m, w));
  }
  return best;
}

GramMatrix pair_gram(std::vector<double> l1, std::vector<double> l2) {
  const std::vector<std::vector<double>> g{std::move(l1), std::move(l2)};
  return gram_matrix(g);
}

std::vector<double> fw_vertices(const FWResult& r) {
  std::vector<double> out;
  for (const FWIteration& it : r.diagnostics.iterations) out.push_back(it.vertex ? double(*it.vertex) : -1.0);
  return out;
}

}  // namespace

TEST_CASE("gram matrix examples", "[por]") {
  const std::vector<std::vector<double>> ortho{{1, 0, 0}, {0, 1, 0}};
  const GramMatrix id = gram_matrix(ortho);
  CHECK(id.size() == 2);
  CHECK(std::vector<double>(id.entries().begin(), id.entries().end()) == std::vector<double>{1, 0, 0, 1});

  const GramMatrix dep = pair_gram({0.6, 0.8}, {1.2, 1.6});
  CHECK_THAT(dep(0, 0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(dep(0, 1), WithinAbs(2.0, 1e-15));
  CHECK_THAT(dep(1, 0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(dep(1, 1), WithinAbs(4.0, 1e-15));

  const std::vector<std::vector<double>> one{{3, 4}};
  CHECK(gram_matrix(one)(0, 0) == 25.0);

  const std::vector<std::vector<double>> ragged{{1, 2}, {1}};
  CHECK_THROWS_AS(gram_matrix(ragged), DimensionError);

  GradientBundle bundle;
  bundle.shared = {{1, 0}, {0, 2}};
  bundle.specific = {{5}, {7, 8}};
  CHECK(gram_matrix(bundle)(1, 1) == 4.0);
}

TEST_CASE("gram matrices of random gradients are symmetric PSD", "[por][property]") {
  SeededRng rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + t % 5, len = 1 + t % 7;
    std::vector<std::vector<double>> g(k, std::vector<double>(len));
    for (auto& v : g)
      for (double& x : v) x = rng.normal();
    const GramMatrix m = gram_matrix(g);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) CHECK(m(i, j) == m(j, i));
    CHECK(m.is_psd());
  }
}

TEST_CASE("closed_form_two examples", "[por]") {
  CHECK(closed_form_two(2.0, 2.0, 2.0) == 1.0);
  // l1 = (1,0), l2 = (0,2)
  const double w = closed_form_two(1.0, 0.0, 4.0);
  CHECK_THAT(w, WithinAbs(0.8, 1e-15));
  const double x = w * 1.0, y = (1.0 - w) * 2.0;
  CHECK_THAT(x, WithinAbs(0.8, 1e-15));
  CHECK_THAT(y, WithinAbs(0.4, 1e-15));
  CHECK_THAT(x * x + y * y, WithinAbs(0.8, 1e-15));
  // 1-D grid at 1e-4
  double best_v = 0.0, best = 1e300;
  for (int i = 0; i <= 10000; ++i) {
    const double v = i * 1e-4;
    const double val = v * v + 4.0 * (1 - v) * (1 - v);
    if (val < best) best = val, best_v = v;
  }
  CHECK_THAT(best_v, WithinAbs(w, 1e-4));

  // l1 = (2,0), l2 = (-1,0)
  const double s = closed_form_two(4.0, -2.0, 1.0);
  CHECK_THAT(s, WithinAbs(1.0 / 3.0, 1e-15));
  CHECK_THAT(s * 2.0 + (1.0 - s) * -1.0, WithinAbs(0.0, 1e-12));

  // the dominated side is selected
  CHECK(closed_form_two(1.0, 2.0, 9.0) == 1.0);
  CHECK(closed_form_two(9.0, 2.0, 1.0) == 0.0);
}

TEST_CASE("frank_wolfe examples", "[por]") {
  const FWResult id = frank_wolfe(GramMatrix::identity(3));
  for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(id.weights[i], WithinAbs(1.0 / 3.0, 1e-15));

  // FW zig-zags between e_1 and e_2 here; R = 100 gets the value but not the weights to 1e-3
  const GramMatrix diag = GramMatrix::diagonal({1, 1, 100});
  const double optimum = 100.0 / 201.0;
  FWConfig long_run;
  long_run.max_iterations = 1000;
  const FWResult d = frank_wolfe(diag, long_run);
  CHECK(d.diagnostics.converged);
  CHECK_THAT(d.weights[0], WithinAbs(100.0 / 201.0, 1e-3));
  CHECK_THAT(d.weights[1], WithinAbs(100.0 / 201.0, 1e-3));
  CHECK_THAT(d.weights[2], WithinAbs(1.0 / 201.0, 1e-3));
  CHECK_THAT(kkt_minimum(diag), WithinAbs(optimum, 1e-12));
  CHECK_THAT(quadratic_value(diag, frank_wolfe(diag).weights.values()), WithinAbs(optimum, 1e-4));

  const FWResult two = frank_wolfe(pair_gram({1, 0}, {0, 2}));
  CHECK_THAT(two.weights[0], WithinAbs(0.8, 1e-4));
  CHECK_THAT(two.weights[1], WithinAbs(0.2, 1e-4));

  const FWResult zero = frank_wolfe(GramMatrix(3));
  CHECK(zero.weights == SimplexWeights::uniform(3));

  const FWResult single = frank_wolfe(GramMatrix::diagonal({5}));
  CHECK(single.weights[0] == 1.0);

  CHECK_THROWS_AS(frank_wolfe(GramMatrix(0)), DomainError);
  GramMatrix bad = GramMatrix::identity(2);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(frank_wolfe(bad), DomainError);
}

TEST_CASE("frank_wolfe stops when w already sits on a vertex", "[por]") {
  // e_1 dominates: (M e_1)_1 = 1 <= (M e_1)_2 = 2, so w* = e_1 and v* = 0 afterwards
  const FWResult r = frank_wolfe(GramMatrix(2, {1, 2, 2, 9}));
  CHECK(r.weights == SimplexWeights::vertex(2, 0));
  CHECK(r.diagnostics.converged);
  CHECK(r.diagnostics.iterations.size() <= 3);
}

TEST_CASE("frank_wolfe output lies on the simplex and the objective never increases", "[por][property]") {
  SeededRng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 1 + t % 6;
    const GramMatrix m = random_gram(rng, k, t % 3);
    const FWResult r = frank_wolfe(m);
    CHECK(on_simplex(r.weights.values()));
    const auto& its = r.diagnostics.iterations;
    for (std::size_t i = 1; i < its.size(); ++i) CHECK(its[i].objective <= its[i - 1].objective + 1e-15);
    CHECK(pareto_stationarity_residual(m, r.weights) <= pareto_stationarity_residual(m, SimplexWeights::uniform(k)));
  }
}

TEST_CASE("frank_wolfe lands within 1e-3 of two independent oracles", "[por][property]") {
  SeededRng rng(2024);
  FWConfig cfg;
  cfg.max_iterations = 1000;
  cfg.v_tol = 1e-6;
  for (std::size_t k : {2u, 3u, 4u, 5u}) {
    for (int t = 0; t < 30; ++t) {
      const GramMatrix m = random_gram(rng, k);
      const double fw = quadratic_value(m, frank_wolfe(m, cfg).weights.values());
      const double kkt = kkt_minimum(m);
      const double oracle = min_norm_oracle(m).objective;
      CHECK_THAT(oracle, WithinAbs(kkt, 1e-8));
      CHECK(fw - kkt <= 1e-3);
      CHECK(fw >= kkt - 1e-12);
    }
  }
}

TEST_CASE("frank_wolfe and closed_form_two agree for K = 2", "[por][property]") {
  SeededRng rng(77);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> a(3), b(3);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    const GramMatrix m = pair_gram(a, b);
    const double w = closed_form_two(m(0, 0), m(0, 1), m(1, 1));
    const double closed = quadratic_value(m, std::vector<double>{w, 1.0 - w});
    CHECK_THAT(quadratic_value(m, frank_wolfe(m).weights.values()), WithinAbs(closed, 1e-6));
  }
}

TEST_CASE("scaling M leaves the Frank-Wolfe path unchanged", "[por][property]") {
  SeededRng rng(5);
  for (int t = 0; t < 100; ++t) {
    const GramMatrix m = random_gram(rng, 2 + t % 4);
    const FWResult base = frank_wolfe(m);
    for (double c : {0.25, 2.0, 1024.0}) {
      const FWResult s = frank_wolfe(m.scaled(c));
      CHECK(s.weights == base.weights);
      CHECK(fw_vertices(s) == fw_vertices(base));
    }
    // rounding can flip a vertex choice on an exact tie, which only happens at the optimum
    for (double c : {0.3, 7.0, 1e4}) {
      const FWResult s = frank_wolfe(m.scaled(c));
      for (std::size_t i = 0; i < m.size(); ++i) CHECK_THAT(s.weights[i], WithinAbs(base.weights[i], 1e-12));
    }
  }
}

TEST_CASE("duality gap examples", "[por]") {
  CHECK(duality_gap(GramMatrix::identity(2), std::vector<double>{0.5, 0.5}) == 0.0);
  CHECK(duality_gap(GramMatrix::identity(2), std::vector<double>{1.0, 0.0}) == 2.0);
}

TEST_CASE("duality gap upper-bounds the suboptimality", "[por][property]") {
  SeededRng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + t % 4;
    const GramMatrix m = random_gram(rng, k);
    const double best = kkt_minimum(m);
    std::vector<double> raw(k);
    for (double& v : raw) v = rng.uniform(0.0, 1.0);
    const std::vector<double> w = project_to_simplex(raw);
    CHECK(duality_gap(m, w) >= quadratic_value(m, w) - best - 1e-12);
  }
}

TEST_CASE("curvature constant examples", "[por]") {
  for (std::size_t k : {2u, 3u, 5u}) CHECK(curvature_constant_quadratic(GramMatrix::identity(k)) == 4.0);
  CHECK(curvature_constant_quadratic(GramMatrix(3)) == 0.0);
  CHECK(curvature_constant_quadratic(GramMatrix::diagonal({1, 4})) == 10.0);
}

TEST_CASE("convergence bound checkers", "[por]") {
  const BoundReport p = verify_primal_bound(GramMatrix::identity(3), 50);
  CHECK(p.passed());
  CHECK(p.checked == 50);
  CHECK(verify_primal_bound(GramMatrix(3), 50).passed());
  CHECK(verify_primal_bound(GramMatrix(3), 50).worst_margin == 0.0);

  const BoundReport g = verify_gap_bound(GramMatrix::identity(2), 10);
  CHECK(g.passed());
  CHECK(g.curvature == 4.0);
  CHECK(verify_gap_bound(GramMatrix(2), 10).passed());

  SeededRng rng(99);
  std::size_t violations = 0;
  for (int t = 0; t < 100; ++t) {
    const GramMatrix m = random_gram(rng, 1 + t % 5);
    violations += verify_primal_bound(m, 100).violations;
    for (std::size_t r : {2u, 10u, 50u}) violations += verify_gap_bound(m, r).violations;
    FWConfig cfg;
    cfg.step_mode = StepMode::fixed_decay;
    cfg.v_tol = 1e-300;
    violations += verify_descent_lemma(m, frank_wolfe(m, cfg).diagnostics).violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("a violated bound is reported", "[por]") {
  // An optimum oracle cannot be fooled, but a corrupted trace breaks the descent inequality.
  const GramMatrix m = GramMatrix::identity(2);
  FWConfig cfg;
  cfg.step_mode = StepMode::fixed_decay;
  FWDiagnostics d = frank_wolfe(m, cfg).diagnostics;
  REQUIRE(d.iterations.size() >= 2);
  d.iterations[1].objective += 10.0;
  CHECK_FALSE(verify_descent_lemma(m, d).passed());
}

TEST_CASE("apply_updates examples", "[por]") {
  ParamGroup sh("shared", {Tensor::vector({1.0, 2.0})});
  ParamGroup t1("tower1", {Tensor::vector({3.0})});
  ParamGroup t2("tower2", {Tensor::vector({4.0})});
  ParamPartition part{{&sh}, {{&t1}, {&t2}}};

  GradientBundle zero{{{0, 0}, {0, 0}}, {{0}, {0}}};
  apply_updates(part, zero, SimplexWeights::uniform(2), 0.5);
  CHECK(sh.tensors[0] == Tensor::vector({1.0, 2.0}));
  CHECK(t1.tensors[0][0] == 3.0);

  GradientBundle g{{{1, 1}, {10, -10}}, {{2}, {4}}};
  apply_updates(part, g, SimplexWeights::vertex(2, 0), 0.5);
  CHECK(sh.tensors[0] == Tensor::vector({0.5, 1.5}));
  CHECK(t1.tensors[0][0] == 2.0);
  CHECK(t2.tensors[0][0] == 2.0);

  ParamGroup all("all", {Tensor::vector({1.0, 1.0})});
  ParamPartition single{{&all}, {{}}};
  apply_updates(single, GradientBundle{{{2, 4}}, {{}}}, SimplexWeights::uniform(1), 0.25);
  CHECK(all.tensors[0] == Tensor::vector({0.5, 0.0}));

  GradientBundle short_shared{{{1}, {1}}, {{2}, {4}}};
  CHECK_THROWS_AS(apply_updates(part, short_shared, SimplexWeights::uniform(2), 0.1), DimensionError);
  GradientBundle one{{{1, 1}}, {{2}}};
  CHECK_THROWS_AS(apply_updates(part, one, SimplexWeights::uniform(2), 0.1), DimensionError);
}

TEST_CASE("stationarity residual examples", "[por]") {
  CHECK(pareto_stationarity_residual(pair_gram({1, 2}, {-1, -2}), SimplexWeights::uniform(2)) == 0.0);
  CHECK(pareto_stationarity_residual(GramMatrix::identity(2), SimplexWeights::uniform(2)) == 0.5);
}

TEST_CASE("simplex weights reject points off the simplex", "[por]") {
  CHECK_THROWS_AS(SimplexWeights({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(SimplexWeights({1.5, -0.5}), DomainError);
  CHECK_NOTHROW(SimplexWeights({0.25, 0.75}));
  CHECK(on_simplex(project_to_simplex(std::vector<double>{3.0, -1.0, 0.2})));
}

TEST_CASE("diagnostics export one row per iterate", "[por]") {
  const FWResult r = frank_wolfe(GramMatrix::diagonal({1, 1, 100}));
  const std::string tsv = diagnostics_to_tsv(r.diagnostics);
  std::istringstream in(tsv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "r\tobjective\tgap\tvertex\tstep\tw1\tw2\tw3");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), '\t') == 7);
  }
  CHECK(rows == r.diagnostics.iterations.size());
}
