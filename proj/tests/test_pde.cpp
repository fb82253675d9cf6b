#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "lprop/pde.hpp"
#include "lprop/reach.hpp"

using namespace lprop;

namespace {

const double kPi = std::acos(-1.0);

OperatorSpec mumford() {
  OperatorSpec op = OperatorSpec::make(3);
  op.A(0, 0) = Expr::constant(1.0);
  op.b[1] = Expr::sin(Expr::variable(1));
  op.b[2] = Expr::cos(Expr::variable(1));
  return op;
}

OperatorSpec ornstein_uhlenbeck() {
  OperatorSpec op = OperatorSpec::make(2);
  op.A(0, 0) = Expr::constant(1.0);
  op.b[1] = Expr::variable(1);
  return op;
}

OperatorSpec heat_form() {
  OperatorSpec op = OperatorSpec::make(2);
  op.A(0, 0) = Expr::constant(1.0);
  op.b[1] = Expr::constant(-1.0);
  return op;
}

OperatorSpec laplacian(int n) {
  OperatorSpec op = OperatorSpec::make(n);
  for (int i = 0; i < n; ++i) op.A(i, i) = Expr::constant(1.0);
  return op;
}

OperatorSpec laplacian_1d() { return laplacian(1); }

double row_weight_at(const DiscreteOperator& L, std::int64_t interior_row,
                     std::int64_t neighbor_node) {
  for (std::int64_t k = L.row_ptr[static_cast<std::size_t>(interior_row)];
       k < L.row_ptr[static_cast<std::size_t>(interior_row) + 1]; ++k) {
    if (L.col[static_cast<std::size_t>(k)] == neighbor_node)
      return L.weight[static_cast<std::size_t>(k)];
  }
  return 0.0;
}

double max_interior_error(const DiscreteOperator& L, const DiscreteSolution& sol,
                          const Expr& exact) {
  double err = 0.0;
  for (const std::int64_t v : L.interior_nodes) {
    const auto x = L.grid.center(L.node_cell[static_cast<std::size_t>(v)]);
    err = std::max(err, std::fabs(sol.value[static_cast<std::size_t>(v)] - exact.evaluate(x)));
  }
  return err;
}

}  // namespace

TEST_CASE("one-dimensional Laplacian stencil is the textbook one") {
  const Grid grid = build_grid(DomainSpec::box({{0.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(laplacian_1d(), grid);
  REQUIRE(L.interior_nodes.size() == 8);
  const double inv_h2 = 1.0 / (0.1 * 0.1);
  for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
    CHECK(L.diag[r] == Catch::Approx(-2.0 * inv_h2));
    CHECK(L.row_ptr[r + 1] - L.row_ptr[r] == 2);
    for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k)
      CHECK(L.weight[static_cast<std::size_t>(k)] == Catch::Approx(inv_h2));
  }
}

TEST_CASE("upwind side follows the sign of the expanded drift") {
  // heat form: c2 = -1, so the first-order part couples to the x2 - h
  // neighbor with weight 1/h and keeps every off-diagonal nonnegative
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.4);
  const DiscreteOperator L = discretize(heat_form(), grid);
  const double inv_h2 = 1.0 / 0.16, inv_h = 1.0 / 0.4;
  const auto cell = grid.locate(std::vector<double>{0.0, 0.0});
  const std::int64_t node = L.cell_node[static_cast<std::size_t>(*cell)];
  const std::int64_t row = L.interior_row[static_cast<std::size_t>(node)];
  REQUIRE(row >= 0);
  const std::int64_t south = L.cell_node[static_cast<std::size_t>(grid.neighbor(*cell, 1, -1))];
  const std::int64_t north = L.cell_node[static_cast<std::size_t>(grid.neighbor(*cell, 1, +1))];
  const std::int64_t east = L.cell_node[static_cast<std::size_t>(grid.neighbor(*cell, 0, +1))];
  CHECK(row_weight_at(L, row, south) == Catch::Approx(inv_h));
  CHECK(row_weight_at(L, row, north) == 0.0);
  CHECK(row_weight_at(L, row, east) == Catch::Approx(inv_h2));
  CHECK(L.diag[static_cast<std::size_t>(row)] == Catch::Approx(-2.0 * inv_h2 - inv_h));
}

TEST_CASE("ou stencil flips the upwind side with the sign of x1") {
  const Grid grid = build_grid(DomainSpec::box({{-1.25, 1.25}, {-1.25, 1.25}}), 0.5);
  const DiscreteOperator L = discretize(ornstein_uhlenbeck(), grid);
  const double inv_h = 1.0 / 0.5;

  auto row_at = [&](double x1, double x2) {
    const auto cell = grid.locate(std::vector<double>{x1, x2});
    REQUIRE(cell.has_value());
    const std::int64_t node = L.cell_node[static_cast<std::size_t>(*cell)];
    const std::int64_t row = L.interior_row[static_cast<std::size_t>(node)];
    REQUIRE(row >= 0);
    return std::pair<std::int64_t, std::int64_t>{row, *cell};
  };

  {
    const auto [row, cell] = row_at(0.5, 0.0);
    const std::int64_t up = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, +1))];
    const std::int64_t dn = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, -1))];
    CHECK(row_weight_at(L, row, up) == Catch::Approx(0.5 * inv_h));
    CHECK(row_weight_at(L, row, dn) == 0.0);
  }
  {
    const auto [row, cell] = row_at(-0.5, 0.0);
    const std::int64_t up = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, +1))];
    const std::int64_t dn = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, -1))];
    CHECK(row_weight_at(L, row, up) == 0.0);
    CHECK(row_weight_at(L, row, dn) == Catch::Approx(0.5 * inv_h));
  }
  {
    // centered column: the drift coefficient vanishes there
    const auto [row, cell] = row_at(0.0, 0.0);
    const std::int64_t up = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, +1))];
    const std::int64_t dn = L.cell_node[static_cast<std::size_t>(grid.neighbor(cell, 1, -1))];
    CHECK(row_weight_at(L, row, up) == 0.0);
    CHECK(row_weight_at(L, row, dn) == 0.0);
  }
}

TEST_CASE("stencils are monotone with zero row sums") {
  const Grid g2 = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  for (const auto& op : {heat_form(), ornstein_uhlenbeck(), laplacian(2)}) {
    const DiscreteOperator L = discretize(op, g2);
    for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
      CHECK(L.diag[r] < 0.0);
      double sum = L.diag[r];
      for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
        CHECK(L.weight[static_cast<std::size_t>(k)] >= 0.0);
        sum += L.weight[static_cast<std::size_t>(k)];
      }
      CHECK(std::fabs(sum) <= 1e-12 * std::fabs(L.diag[r]));
    }
  }
}

TEST_CASE("discretize rejects unsupported operators") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.25);
  OperatorSpec cross = OperatorSpec::make(2);
  cross.A(0, 0) = Expr::constant(1.0);
  cross.A(0, 1) = Expr::constant(0.5);
  cross.A(1, 0) = Expr::constant(0.5);
  cross.A(1, 1) = Expr::constant(1.0);
  CHECK_THROWS_AS(discretize(cross, grid), NonDiagonalError);

  CHECK_THROWS_AS(discretize(OperatorSpec::make(2), grid), DegeneracyError);
}

TEST_CASE("constants are discrete-harmonic and the maximum principle holds") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  for (const auto& op : {heat_form(), ornstein_uhlenbeck(), laplacian(2)}) {
    const DiscreteOperator L = discretize(op, grid);
    const auto ones = boundary_data(L, [](std::span<const double>) { return 1.0; });
    const DiscreteSolution sol = solve(L, ones, 1e-12, 1000000);
    for (double v : sol.value) CHECK(v == Catch::Approx(1.0).margin(1e-9));

    // random nonnegative data stays within the data bounds
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> g(L.boundary_nodes.size());
    for (auto& v : g) v = u(rng);
    const double lo = *std::min_element(g.begin(), g.end());
    const double hi = *std::max_element(g.begin(), g.end());
    const DiscreteSolution s2 = solve(L, g, 1e-11, 1000000);
    for (const std::int64_t v : L.interior_nodes) {
      CHECK(s2.value[static_cast<std::size_t>(v)] >= lo - 1e-9);
      CHECK(s2.value[static_cast<std::size_t>(v)] <= hi + 1e-9);
    }
  }
}

TEST_CASE("scheme is consistent and the solution error vanishes with h") {
  // d11 u - d2 u = 0 for u = exp(x1 + x2)  and
  // d11 u + x1 d2 u = 0 for u = x1 x2 - x1^4 / 12
  const Expr heat_exact = Expr::exp(Expr::variable(1) + Expr::variable(2));
  const Expr ou_exact = Expr::variable(1) * Expr::variable(2) -
                        Expr::pow(Expr::variable(1), 4) / Expr::constant(12.0);

  // truncation residual: the stencil applied to exact solution samples,
  // compared on a fixed compact subbox so the max location cannot drift
  // with h
  auto truncation = [](const DiscreteOperator& L, const Expr& exact) {
    double worst = 0.0;
    for (std::size_t r = 0; r < L.interior_nodes.size(); ++r) {
      const std::int64_t v = L.interior_nodes[r];
      const auto x = L.grid.center(L.node_cell[static_cast<std::size_t>(v)]);
      if (std::fabs(x[0]) > 0.5 || std::fabs(x[1]) > 0.5) continue;
      double s = L.diag[r] * exact.evaluate(x);
      for (std::int64_t k = L.row_ptr[r]; k < L.row_ptr[r + 1]; ++k) {
        const std::int64_t w = L.col[static_cast<std::size_t>(k)];
        s += L.weight[static_cast<std::size_t>(k)] *
             exact.evaluate(L.grid.center(L.node_cell[static_cast<std::size_t>(w)]));
      }
      worst = std::max(worst, std::fabs(s));
    }
    return worst;
  };

  struct Case {
    OperatorSpec op;
    const Expr* exact;
  };
  for (const auto& cs : {Case{heat_form(), &heat_exact}, Case{ornstein_uhlenbeck(), &ou_exact}}) {
    std::vector<double> tau, err;
    for (const double h : {0.1, 0.05}) {
      const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), h);
      const DiscreteOperator L = discretize(cs.op, grid);
      tau.push_back(truncation(L, *cs.exact));
      const auto g = boundary_data(
          L, [&](std::span<const double> x) { return cs.exact->evaluate(x); });
      const DiscreteSolution sol = solve(L, g, 1e-11, 1000000);
      err.push_back(max_interior_error(L, sol, *cs.exact));
    }
    // consistency order is clean; the solution error approaches first
    // order from below on these resolutions
    CHECK(std::log2(tau[0] / tau[1]) >= 0.9);
    CHECK(std::log2(err[0] / err[1]) >= 0.8);
    CHECK(err[1] < err[0]);
  }
}

TEST_CASE("solve reports non-convergence") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(laplacian(2), grid);
  const auto g = boundary_data(L, [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_AS(solve(L, g, 1e-12, 3), NonConvergence);
}

TEST_CASE("solve is deterministic bit for bit") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(ornstein_uhlenbeck(), grid);
  const auto g = boundary_data(L, [](std::span<const double> x) { return x[0] * x[0] + 0.3 * x[1]; });
  const DiscreteSolution a = solve(L, g, 1e-10, 1000000);
  const DiscreteSolution b = solve(L, g, 1e-10, 1000000);
  REQUIRE(a.value.size() == b.value.size());
  for (std::size_t i = 0; i < a.value.size(); ++i) CHECK(a.value[i] == b.value[i]);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("one-dimensional harmonic measure is linear interpolation") {
  const Grid grid = build_grid(DomainSpec::box({{0.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(laplacian_1d(), grid);
  REQUIRE(L.boundary_nodes.size() == 2);
  const double c0 = grid.center(L.node_cell[static_cast<std::size_t>(L.boundary_nodes[0])])[0];
  const double c1 = grid.center(L.node_cell[static_cast<std::size_t>(L.boundary_nodes[1])])[0];
  for (const std::int64_t v : L.interior_nodes) {
    const double x = grid.center(L.node_cell[static_cast<std::size_t>(v)])[0];
    const HarmonicMeasureRow row = harmonic_measure(L, v);
    // hand-solved tridiagonal system: weights interpolate between the
    // first and last node positions
    CHECK(row.weight[1] == Catch::Approx((x - c0) / (c1 - c0)).margin(1e-9));
    CHECK(row.weight[0] == Catch::Approx((c1 - x) / (c1 - c0)).margin(1e-9));
    CHECK(row.sum == Catch::Approx(1.0).margin(1e-8));
  }
}

TEST_CASE("measure rows are nonnegative probability vectors") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  for (const auto& op : {heat_form(), ornstein_uhlenbeck(), laplacian(2)}) {
    const DiscreteOperator L = discretize(op, grid);
    const auto cell = grid.locate(std::vector<double>{0.0, 0.0});
    const HarmonicMeasureRow row =
        harmonic_measure(L, L.cell_node[static_cast<std::size_t>(*cell)]);
    CHECK(row.sum == Catch::Approx(1.0).margin(1e-8));
    for (double w : row.weight) CHECK(w >= -1e-10);
  }
}

TEST_CASE("heat-form measure puts no mass above the start layer") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(heat_form(), grid);
  const auto cell = grid.locate(std::vector<double>{0.0, 0.0});
  const HarmonicMeasureRow row =
      harmonic_measure(L, L.cell_node[static_cast<std::size_t>(*cell)]);
  double mass_above = 0.0;
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y) {
    const auto x = grid.center(L.node_cell[static_cast<std::size_t>(L.boundary_nodes[y])]);
    if (x[1] > grid.h) mass_above += row.weight[y];
  }
  CHECK(mass_above <= 1e-10);
}

TEST_CASE("adjoint measure row matches forward indicator solves") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.2);
  const DiscreteOperator L = discretize(heat_form(), grid);
  const auto cell = grid.locate(std::vector<double>{0.1, 0.1});
  const std::int64_t node = L.cell_node[static_cast<std::size_t>(*cell)];
  const HarmonicMeasureRow row = harmonic_measure(L, node);
  std::vector<double> g(L.boundary_nodes.size(), 0.0);
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y) {
    g[y] = 1.0;
    const DiscreteSolution u = solve(L, g, 1e-12, 1000000);
    g[y] = 0.0;
    CHECK(u.value[static_cast<std::size_t>(node)] ==
          Catch::Approx(row.weight[y]).margin(1e-8));
  }
}

TEST_CASE("harnack ratio of the singleton is one") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.2);
  const DiscreteOperator L = discretize(heat_form(), grid);
  const auto cell = grid.locate(std::vector<double>{0.0, -0.1});
  const HarnackEstimate est = harnack_ratio(L, *cell, {*cell}, 1e-12);
  CHECK_FALSE(est.infinite);
  CHECK(est.ratio == Catch::Approx(1.0));
}

TEST_CASE("heat-form harnack ratio is finite below and infinite above") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const DiscreteOperator L = discretize(heat_form(), grid);
  const auto x0 = grid.locate(std::vector<double>{0.0, 0.0});

  auto cells_in_box = [&](double lo1, double hi1, double lo2, double hi2) {
    std::vector<std::int64_t> cells;
    for (std::int64_t c = 0; c < grid.total_cells; ++c) {
      const std::int64_t v = L.cell_node[static_cast<std::size_t>(c)];
      if (v < 0 || L.node_is_boundary[static_cast<std::size_t>(v)]) continue;
      const auto x = grid.center(c);
      if (x[0] >= lo1 && x[0] <= hi1 && x[1] >= lo2 && x[1] <= hi2) cells.push_back(c);
    }
    return cells;
  };

  const auto below = cells_in_box(-0.5, 0.5, -0.75, -0.25);
  REQUIRE_FALSE(below.empty());
  const HarnackEstimate fin = harnack_ratio(L, *x0, below, 1e-12);
  CHECK_FALSE(fin.infinite);
  CHECK(fin.ratio >= 1.0);
  CHECK(std::isfinite(fin.ratio));
  CHECK(fin.witness_boundary_node >= 0);

  const auto above = cells_in_box(-0.5, 0.5, 0.25, 0.75);
  REQUIRE_FALSE(above.empty());
  const HarnackEstimate inf = harnack_ratio(L, *x0, above, 1e-12);
  CHECK(inf.infinite);

  // optimality oracle: any nonnegative data obeys the reported constant,
  // and the witness indicator attains it
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> g(L.boundary_nodes.size());
  const std::int64_t x0_node = L.cell_node[static_cast<std::size_t>(*x0)];
  for (int t = 0; t < 20; ++t) {
    for (auto& v : g) v = u(rng);
    const DiscreteSolution sol = solve(L, g, 1e-12, 1000000);
    double sup_k = 0.0;
    for (const std::int64_t c : below) {
      const std::int64_t v = L.cell_node[static_cast<std::size_t>(c)];
      sup_k = std::max(sup_k, sol.value[static_cast<std::size_t>(v)]);
    }
    CHECK(sup_k <= fin.ratio * sol.value[static_cast<std::size_t>(x0_node)] + 1e-8);
  }
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y)
    if (L.boundary_nodes[y] == fin.witness_boundary_node) g[y] = 1.0;
  const DiscreteSolution wit = solve(L, g, 1e-12, 1000000);
  double sup_k = 0.0;
  for (const std::int64_t c : below) {
    const std::int64_t v = L.cell_node[static_cast<std::size_t>(c)];
    sup_k = std::max(sup_k, wit.value[static_cast<std::size_t>(v)]);
  }
  CHECK(sup_k / wit.value[static_cast<std::size_t>(x0_node)] ==
        Catch::Approx(fin.ratio).epsilon(1e-6));
}

TEST_CASE("absorbent hull of the Laplacian is everything the stencil touches") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.25);
  const DiscreteOperator L = discretize(laplacian(2), grid);
  const auto cell = grid.locate(std::vector<double>{0.0, 0.0});
  const auto hull = absorbent_hull(L, *cell);
  std::set<std::int64_t> hull_set(hull.begin(), hull.end());
  // every interior node and every referenced boundary atom; only the four
  // grid corners sit outside every stencil row
  for (const std::int64_t v : L.interior_nodes)
    CHECK(hull_set.count(L.node_cell[static_cast<std::size_t>(v)]) == 1);
  for (std::size_t k = 0; k < L.col.size(); ++k) {
    const std::int64_t v = L.col[k];
    CHECK(hull_set.count(L.node_cell[static_cast<std::size_t>(v)]) == 1);
  }
  CHECK(static_cast<std::int64_t>(hull.size()) == L.node_count() - 4);
}

TEST_CASE("heat-form hull on the 5x5 grid matches the hand trace") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.4);
  REQUIRE(grid.counts == std::vector<int>{5, 5});
  const DiscreteOperator L = discretize(heat_form(), grid);
  const auto x0 = grid.locate(std::vector<double>{0.0, 0.0});
  const auto hull = absorbent_hull(L, *x0);

  std::set<std::pair<int, int>> expected;
  for (int i : {0, 1, 2, 3, 4}) {
    expected.insert({i, 2});  // start row
    expected.insert({i, 1});  // one step down
  }
  for (int i : {1, 2, 3}) expected.insert({i, 0});  // bottom row minus corners
  std::set<std::pair<int, int>> got;
  for (const std::int64_t c : hull) {
    const auto mi = grid.multi_index(c);
    got.insert({mi[0], mi[1]});
  }
  CHECK(got == expected);
}

TEST_CASE("ou hull percolates both vertical directions") {
  const Grid grid = build_grid(DomainSpec::box({{-1.25, 1.25}, {-1.25, 1.25}}), 0.5);
  const DiscreteOperator L = discretize(ornstein_uhlenbeck(), grid);
  const auto x0 = grid.locate(std::vector<double>{0.0, 0.0});
  const auto hull = absorbent_hull(L, *x0);
  std::set<std::int64_t> hull_set(hull.begin(), hull.end());
  for (const std::int64_t v : L.interior_nodes)
    CHECK(hull_set.count(L.node_cell[static_cast<std::size_t>(v)]) == 1);
}

TEST_CASE("reach cells sit inside the absorbent hull up to one cell") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const OperatorSpec op = heat_form();
  const DiscreteOperator L = discretize(op, grid);
  const std::vector<double> x0{0.0, 0.0};
  const ReachSet rs = compute(op, grid, x0, {});
  const auto hull = absorbent_hull(L, *grid.locate(x0));
  std::set<std::int64_t> hull_set(hull.begin(), hull.end());
  for (std::int64_t c = 0; c < grid.total_cells; ++c) {
    if (!rs.reached[static_cast<std::size_t>(c)]) continue;
    bool ok = hull_set.count(c) > 0;
    const auto mi = grid.multi_index(c);
    for (int d1 = -1; d1 <= 1 && !ok; ++d1) {
      for (int d2 = -1; d2 <= 1 && !ok; ++d2) {
        std::vector<int> nb{mi[0] + d1, mi[1] + d2};
        if (nb[0] < 0 || nb[0] >= grid.counts[0] || nb[1] < 0 || nb[1] >= grid.counts[1])
          continue;
        ok = hull_set.count(grid.linear_index(nb)) > 0;
      }
    }
    CHECK(ok);
  }
}

TEST_CASE("barrier check accepts the computed parameters and rejects flat ones") {
  const DomainSpec square = DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}});
  const Grid grid = build_grid(square, 0.1);
  const DiscreteOperator L = discretize(heat_form(), grid);

  const BarrierParams bp = barrier_params(heat_form(), square, 500);
  const BarrierReport rep = check_barrier(L, bp);
  CHECK(rep.pass);
  CHECK(rep.min_w > 0.0);
  CHECK(rep.max_interior_Lw < 0.0);

  const BarrierReport flat = check_barrier(L, BarrierParams{0.0, 2.0});
  CHECK_FALSE(flat.pass);  // w constant, Lw = 0

  const double a = 1.5 * kPi;
  const DomainSpec slab = DomainSpec::box_ball({{-a, a}}, {0.0, 0.0}, 1.0);
  const Grid g3 = build_grid(slab, 0.25);
  OperatorSpec mum = mumford();
  const DiscreteOperator L3 = discretize(mum, g3);
  const BarrierReport rep3 = check_barrier(L3, barrier_params(mum, slab, 500));
  CHECK(rep3.pass);
}

TEST_CASE("maximum propagation holds on the reach set") {
  const Grid grid = build_grid(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), 0.1);
  const OperatorSpec op = heat_form();
  const DiscreteOperator L = discretize(op, grid);
  const auto x0_cell = grid.locate(std::vector<double>{0.0, 0.0});
  const std::int64_t x0_node = L.cell_node[static_cast<std::size_t>(*x0_cell)];

  // constants: trivially constant on any cell set
  const auto ones = boundary_data(L, [](std::span<const double>) { return 1.0; });
  const DiscreteSolution constant = solve(L, ones, 1e-12, 1000000);
  CHECK(check_amano(L, constant, *x0_cell, {*x0_cell}, 1e-9));

  // data = indicator of the atoms the start node sees: the solution is 1
  // at the start node and on its whole propagation set
  const HarmonicMeasureRow row = harmonic_measure(L, x0_node);
  std::vector<double> g(L.boundary_nodes.size(), 0.0);
  for (std::size_t y = 0; y < L.boundary_nodes.size(); ++y)
    g[y] = row.weight[y] > 1e-14 ? 1.0 : 0.0;
  const DiscreteSolution sol = solve(L, g, 1e-12, 1000000);
  CHECK(sol.value[static_cast<std::size_t>(x0_node)] == Catch::Approx(1.0).margin(1e-8));

  // P must consist of interior cells
  const ReachSet rs = compute(op, grid, std::vector<double>{0.0, 0.0}, {});
  std::vector<std::int64_t> reach_cells;
  for (std::int64_t c = 0; c < grid.total_cells; ++c) {
    if (!rs.reached[static_cast<std::size_t>(c)]) continue;
    const std::int64_t v = L.cell_node[static_cast<std::size_t>(c)];
    if (v >= 0 && !L.node_is_boundary[static_cast<std::size_t>(v)]) reach_cells.push_back(c);
  }
  CHECK(check_amano(L, sol, *x0_cell, reach_cells, 1e-6));

  // a solution whose maximum sits away from x0 passes vacuously
  const auto top = boundary_data(L, [](std::span<const double> x) { return x[1] > 0.5 ? 1.0 : 0.0; });
  const DiscreteSolution vac = solve(L, top, 1e-12, 1000000);
  CHECK(check_amano(L, vac, *x0_cell, reach_cells, 1e-6));
}
