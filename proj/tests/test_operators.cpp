#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "lprop/operators.hpp"

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

std::vector<double> rand_point(std::mt19937& rng, int n, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& c : p) c = d(rng);
  return p;
}

// Independent bracket oracle: finite-difference Jacobians of the fields.
std::vector<double> numeric_bracket(const VectorField& v, const VectorField& w,
                                    const std::vector<double>& p, double h = 1e-6) {
  const int n = v.dimension();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  auto partial = [&](const VectorField& f, int comp, int axis) {
    auto q = p;
    q[static_cast<std::size_t>(axis)] += h;
    const double up = f.components[static_cast<std::size_t>(comp)].evaluate(q);
    q[static_cast<std::size_t>(axis)] -= 2.0 * h;
    const double dn = f.components[static_cast<std::size_t>(comp)].evaluate(q);
    return (up - dn) / (2.0 * h);
  };
  const auto vp = v.evaluate(p);
  const auto wp = w.evaluate(p);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      out[static_cast<std::size_t>(k)] +=
          vp[static_cast<std::size_t>(i)] * partial(w, k, i) -
          wp[static_cast<std::size_t>(i)] * partial(v, k, i);
  return out;
}

// Monomial-basis polynomial of degree <= 3 with random coefficients.
Expr random_poly(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> coef(-1.5, 1.5);
  Expr u = Expr::constant(coef(rng));
  for (int i = 1; i <= n; ++i) {
    u = u + Expr::constant(coef(rng)) * Expr::variable(i);
    u = u + Expr::constant(coef(rng)) * Expr::pow(Expr::variable(i), 2);
    u = u + Expr::constant(coef(rng)) * Expr::pow(Expr::variable(i), 3);
    for (int j = i + 1; j <= n; ++j) {
      u = u + Expr::constant(coef(rng)) * Expr::variable(i) * Expr::variable(j);
      u = u + Expr::constant(coef(rng)) * Expr::pow(Expr::variable(i), 2) * Expr::variable(j);
    }
  }
  return u;
}

// Divergence-form application of the operator to a test function.
Expr apply_divergence_form(const OperatorSpec& op, const Expr& u) {
  Expr out = Expr::constant(0.0);
  for (int i = 0; i < op.n; ++i) {
    for (int j = 0; j < op.n; ++j)
      out = out + (op.A(i, j) * u.differentiate(j + 1)).differentiate(i + 1);
    out = out + op.b[static_cast<std::size_t>(i)] * u.differentiate(i + 1);
  }
  return out;
}

// Non-divergence route through drift_expand.
Expr apply_nondivergence_form(const OperatorSpec& op, const Expr& u) {
  const auto c = drift_expand(op);
  Expr out = Expr::constant(0.0);
  for (int i = 0; i < op.n; ++i) {
    for (int j = 0; j < op.n; ++j)
      out = out + op.A(i, j) * u.differentiate(i + 1).differentiate(j + 1);
    out = out + c[static_cast<std::size_t>(i)] * u.differentiate(i + 1);
  }
  return out;
}

}  // namespace

TEST_CASE("vector_fields extracts rows of A and the drift") {
  std::mt19937 rng(5);
  const auto fs = vector_fields(mumford());
  for (int k = 0; k < 10; ++k) {
    const auto p = rand_point(rng, 3);
    const auto x1 = fs.X[0].evaluate(p);
    CHECK(x1[0] == 1.0);
    CHECK(x1[1] == 0.0);
    CHECK(x1[2] == 0.0);
    for (int j : {1, 2}) {
      for (double c : fs.X[static_cast<std::size_t>(j)].evaluate(p)) CHECK(c == 0.0);
    }
    const auto y = fs.Y.evaluate(p);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == Catch::Approx(std::sin(p[0])));
    CHECK(y[2] == Catch::Approx(std::cos(p[0])));
  }

  const auto ou = vector_fields(ornstein_uhlenbeck());
  const std::vector<double> p{0.7, -0.3};
  CHECK(ou.X[0].evaluate(p) == std::vector<double>{1.0, 0.0});
  CHECK(ou.Y.evaluate(p)[1] == Catch::Approx(0.7));

  const auto lap = vector_fields(laplacian(2));
  CHECK(lap.X[0].evaluate(p) == std::vector<double>{1.0, 0.0});
  CHECK(lap.X[1].evaluate(p) == std::vector<double>{0.0, 1.0});
  for (double c : lap.Y.evaluate(p)) CHECK(c == 0.0);
}

TEST_CASE("drift_expand adds the divergence of the columns") {
  std::mt19937 rng(6);
  const auto c_ou = drift_expand(ornstein_uhlenbeck());
  const auto c_heat = drift_expand(heat_form());
  OperatorSpec variable_diag = OperatorSpec::make(2);
  variable_diag.A(0, 0) = Expr::constant(1.0) + Expr::pow(Expr::variable(1), 2);
  const auto c_v = drift_expand(variable_diag);
  for (int k = 0; k < 10; ++k) {
    const auto p = rand_point(rng, 2);
    CHECK(c_ou[0].evaluate(p) == 0.0);
    CHECK(c_ou[1].evaluate(p) == Catch::Approx(p[0]));
    CHECK(c_heat[0].evaluate(p) == 0.0);
    CHECK(c_heat[1].evaluate(p) == -1.0);
    CHECK(c_v[0].evaluate(p) == Catch::Approx(2.0 * p[0]));
    CHECK(c_v[1].evaluate(p) == 0.0);
  }
}

TEST_CASE("divergence and non-divergence routes agree on random polynomials") {
  std::mt19937 rng(77);
  for (const auto& op : {mumford(), ornstein_uhlenbeck(), heat_form()}) {
    for (int t = 0; t < 5; ++t) {
      const Expr u = random_poly(rng, op.n);
      const Expr lhs = apply_divergence_form(op, u);
      const Expr rhs = apply_nondivergence_form(op, u);
      for (int k = 0; k < 10; ++k) {
        const auto p = rand_point(rng, op.n);
        const double a = lhs.evaluate(p);
        const double b = rhs.evaluate(p);
        CHECK(std::fabs(a - b) <= 1e-9 * (1.0 + std::fabs(a)));
      }
    }
  }
}

TEST_CASE("barrier parameters match the closed-form bounds") {
  const DomainSpec square = DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}});
  const BarrierParams bp = barrier_params(heat_form(), square, 500);
  CHECK(bp.lambda == Catch::Approx(1.0).margin(1e-12));
  CHECK(bp.M == Catch::Approx(std::exp(1.0) + 1.0).margin(1e-12));

  const double a = 1.5 * kPi;
  const DomainSpec slab = DomainSpec::box_ball({{-a, a}}, {0.0, 0.0}, 1.0);
  const BarrierParams mb = barrier_params(mumford(), slab, 500);
  CHECK(mb.lambda == Catch::Approx(1.0).margin(1e-12));
  CHECK(mb.M == Catch::Approx(std::exp(a) + 1.0).margin(1e-9));

  OperatorSpec degenerate = OperatorSpec::make(2);
  degenerate.b[1] = Expr::constant(1.0);
  CHECK_THROWS_AS(barrier_params(degenerate, square, 100), H2Violation);
}

TEST_CASE("barrier positivity holds at sampled interior points") {
  const DomainSpec square = DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}});
  for (const auto& op : {heat_form(), ornstein_uhlenbeck()}) {
    const BarrierParams bp = barrier_params(op, square, 500);
    const auto c = drift_expand(op);
    QuasiSampler sampler(square);
    for (int k = 0; k < 1000; ++k) {
      const auto p = sampler.next();
      const double val = bp.lambda * op.A(0, 0).evaluate(p) + c[0].evaluate(p);
      CHECK(val > 0.0);
    }
  }
}

TEST_CASE("lie brackets match hand computations and the numeric oracle") {
  std::mt19937 rng(13);
  VectorField d1{{Expr::constant(1.0), Expr::constant(0.0)}};
  VectorField x1d2{{Expr::constant(0.0), Expr::variable(1)}};
  const VectorField br = lie_bracket(d1, x1d2);
  for (int k = 0; k < 10; ++k) {
    const auto p = rand_point(rng, 2);
    CHECK(br.evaluate(p) == std::vector<double>{0.0, 1.0});
  }

  const VectorField self = lie_bracket(x1d2, x1d2);
  for (int k = 0; k < 5; ++k) {
    for (double c : self.evaluate(rand_point(rng, 2))) CHECK(c == 0.0);
  }

  const auto fs = vector_fields(mumford());
  const VectorField mb = lie_bracket(fs.X[0], fs.Y);
  for (int k = 0; k < 10; ++k) {
    const auto p = rand_point(rng, 3);
    const auto v = mb.evaluate(p);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == Catch::Approx(std::cos(p[0])));
    CHECK(v[2] == Catch::Approx(-std::sin(p[0])));
    const auto oracle = numeric_bracket(fs.X[0], fs.Y, p);
    for (int d = 0; d < 3; ++d)
      CHECK(v[static_cast<std::size_t>(d)] ==
            Catch::Approx(oracle[static_cast<std::size_t>(d)]).margin(1e-8));
  }
}

TEST_CASE("bracket antisymmetry and the Jacobi identity hold sampled") {
  std::mt19937 rng(21);
  const auto fs = vector_fields(mumford());
  const VectorField z = lie_bracket(fs.X[0], fs.Y);
  const VectorField ab = lie_bracket(fs.Y, fs.X[0]);
  for (int k = 0; k < 20; ++k) {
    const auto p = rand_point(rng, 3);
    const auto u = z.evaluate(p);
    const auto v = ab.evaluate(p);
    for (int d = 0; d < 3; ++d)
      CHECK(u[static_cast<std::size_t>(d)] + v[static_cast<std::size_t>(d)] ==
            Catch::Approx(0.0).margin(1e-12));
  }

  // [X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]] = 0 on the fields of the example.
  const VectorField& X = fs.X[0];
  const VectorField& Y = fs.Y;
  const VectorField term1 = lie_bracket(X, lie_bracket(Y, z));
  const VectorField term2 = lie_bracket(Y, lie_bracket(z, X));
  const VectorField term3 = lie_bracket(z, lie_bracket(X, Y));
  for (int k = 0; k < 10; ++k) {
    const auto p = rand_point(rng, 3);
    const auto a = term1.evaluate(p);
    const auto b = term2.evaluate(p);
    const auto c = term3.evaluate(p);
    for (int d = 0; d < 3; ++d)
      CHECK(a[static_cast<std::size_t>(d)] + b[static_cast<std::size_t>(d)] +
                c[static_cast<std::size_t>(d)] ==
            Catch::Approx(0.0).margin(1e-9));
  }
}

TEST_CASE("hoermander ranks match the hand oracles") {
  std::mt19937 rng(31);
  const auto mum = mumford();
  const auto ou = ornstein_uhlenbeck();
  const auto heat = heat_form();
  for (int k = 0; k < 20; ++k) {
    CHECK(hoermander_rank(mum, rand_point(rng, 3), 2) == 3);
    CHECK(hoermander_rank(ou, rand_point(rng, 2), 2) == 2);
    CHECK(hoermander_rank(heat, rand_point(rng, 2), 1) == 2);
  }
}

TEST_CASE("hoermander rank is monotone in depth and bounded by n") {
  std::mt19937 rng(41);
  for (const auto& op : {mumford(), ornstein_uhlenbeck(), heat_form()}) {
    for (int k = 0; k < 5; ++k) {
      const auto p = rand_point(rng, op.n);
      int prev = 0;
      for (int depth = 1; depth <= 4; ++depth) {
        const int r = hoermander_rank(op, p, depth);
        CHECK(r >= prev);
        CHECK(r <= op.n);
        prev = r;
      }
    }
  }
}

TEST_CASE("check_h2 samples the infimum of a11") {
  const double a = 1.5 * kPi;
  const DomainSpec slab = DomainSpec::box_ball({{-a, a}}, {0.0, 0.0}, 1.0);
  const auto mum = check_h2(mumford(), slab, 500);
  CHECK(mum.holds);
  CHECK(mum.sampled_inf == 1.0);

  const DomainSpec square = DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}});
  OperatorSpec vanishing = OperatorSpec::make(2);
  vanishing.A(0, 0) = Expr::pow(Expr::variable(1), 2);
  CHECK_FALSE(check_h2(vanishing, square, 500).holds);

  OperatorSpec shifted = OperatorSpec::make(2);
  shifted.A(0, 0) = Expr::constant(2.0) + Expr::sin(Expr::variable(1));
  const auto sh = check_h2(shifted, square, 500);
  CHECK(sh.holds);
  CHECK(sh.sampled_inf >= 1.0);
}

TEST_CASE("lift appends a uniformly elliptic axis") {
  const OperatorSpec lap3 = lift(laplacian(2));
  CHECK(lap3.n == 3);
  std::mt19937 rng(51);
  const auto p = rand_point(rng, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(lap3.A(i, j).evaluate(p) == (i == j ? 1.0 : 0.0));

  // The introduction-style example d1 + x1^2 d22 (read with the plus).
  OperatorSpec grushin = OperatorSpec::make(2);
  grushin.A(1, 1) = Expr::pow(Expr::variable(1), 2);
  grushin.b[0] = Expr::constant(1.0);
  const OperatorSpec lifted = lift(grushin);
  CHECK(lifted.n == 3);
  CHECK(lifted.A(2, 2).evaluate(p) == 1.0);
  CHECK(lifted.b[2].evaluate(p) == 0.0);

  const OperatorSpec lifted_mum = lift(mumford());
  for (int k = 0; k < 20; ++k) {
    CHECK(hoermander_rank(lifted_mum, rand_point(rng, 4), 2) == 4);
  }

  // Lifted fields: X_{n+1} is the new coordinate direction, Y gains a zero.
  const auto fs = vector_fields(lifted_mum);
  const auto q = rand_point(rng, 4);
  CHECK(fs.X[3].evaluate(q) == std::vector<double>{0.0, 0.0, 0.0, 1.0});
  const auto y = fs.Y.evaluate(q);
  CHECK(y[3] == 0.0);
  CHECK(y[1] == Catch::Approx(std::sin(q[0])));
}

TEST_CASE("check_operator validates symmetry and positive semidefiniteness") {
  const DomainSpec square = DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}});
  for (const auto& op : {ornstein_uhlenbeck(), heat_form(), laplacian(2)}) {
    const OperatorCheck oc = check_operator(op, square, 100);
    CHECK(oc.symmetric);
    CHECK(oc.positive_semidefinite);
  }

  OperatorSpec asym = OperatorSpec::make(2);
  asym.A(0, 1) = Expr::constant(1.0);
  const OperatorCheck oc = check_operator(asym, square, 50);
  CHECK_FALSE(oc.symmetric);

  OperatorSpec indef = OperatorSpec::make(2);
  indef.A(0, 0) = Expr::constant(-1.0);
  CHECK_FALSE(check_operator(indef, square, 50).positive_semidefinite);
}
