#include <doctest.h>

#include <cmath>
#include <vector>

#include "bspcop/copula.hpp"
#include "bspcop/error.hpp"
#include "bspcop/quadrature.hpp"
#include "bspcop/sample.hpp"
#include "bspcop/studies.hpp"

using namespace bspcop;

namespace {

// Mass of the density over [0,x] x [0,y], integrating knot cell by knot cell.
double quad_mass(const CopulaModel& m, double x, double y) {
  auto tu = m.bases()[0].knots();
  auto tv = m.bases()[1].knots();
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < tu.size(); ++i) {
    const double a = tu[i], b = std::min(tu[i + 1], x);
    if (b <= a) continue;
    for (std::size_t j = 0; j + 1 < tv.size(); ++j) {
      const double c = tv[j], d = std::min(tv[j + 1], y);
      if (d <= c) continue;
      total += integrate(
          [&](double u) { return integrate([&](double v) { return m.density(u, v); }, c, d, 8); }, a, b, 8);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("validate reports exact feasibility for the fixtures") {
  for (int id = 1; id <= 3; ++id) {
    auto m = fixture_model(id);
    auto rep = validate(m.params(), m.bases());
    CHECK(rep.feasible);
    CHECK(rep.max_residual() < 1e-15);
    CHECK(std::abs(rep.total_deviation) < 1e-15);
    CHECK(rep.min_entry >= 0.0);
  }
}

TEST_CASE("validate flags a scaled tensor") {
  auto m = fixture_model(2);
  std::vector<double> e(m.params().entries().begin(), m.params().entries().end());
  for (double& v : e) v *= 1.01;
  ParamTensor scaled({4, 5}, e, m.params().targets());
  auto rep = validate(scaled, m.bases());
  CHECK_FALSE(rep.feasible);
  CHECK(rep.total_deviation == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("validate rejects mismatched shapes") {
  auto m = fixture_model(1);
  std::vector<BasisSystem> wrong{BasisSystem::uniform(3, 5), BasisSystem::uniform(3, 5)};
  CHECK_THROWS_AS(validate(m.params(), wrong), Error);
}

TEST_CASE("independence and diagonal models") {
  auto ind = independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 5)});
  CHECK(ind.params().at(0, 0) == doctest::Approx(0.03125).epsilon(1e-15));
  for (double u : {0.0, 0.25, 0.5, 0.75, 1.0})
    for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      CHECK(std::abs(ind.density(u, v) - 1.0) < 1e-12);
      CHECK(std::abs(ind.cdf(u, v) - u * v) < 1e-12);
    }

  auto diag = diagonal_model(BasisSystem::uniform(3, 5));
  CHECK(diag.params().at(0, 0) == 0.125);
  CHECK(diag.params().at(2, 2) == 0.25);
  CHECK(diag.params().at(0, 1) == 0.0);
  CHECK(validate(diag.params(), diag.bases()).max_residual() == 0.0);
  CHECK(diag.density(0.0, 0.0) == doctest::Approx(8.0).epsilon(1e-14));  // 0.125 * (1/q0)^2, q0 = 1/8
  CHECK(diag.density(0.0, 1.0) == 0.0);
}

TEST_CASE("fixture copulas: nonnegative, unit mass, uniform margins") {
  for (int id = 1; id <= 3; ++id) {
    auto m = fixture_model(id);
    std::vector<double> axis(201);
    for (int i = 0; i <= 200; ++i) axis[i] = i / 200.0;
    auto grid = m.density_grid({axis, axis});
    double lo = 1.0;
    for (double v : grid) lo = std::min(lo, v);
    CHECK(lo >= 0.0);
    CHECK(std::abs(quad_mass(m, 1.0, 1.0) - 1.0) < 1e-8);
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      REQUIRE(std::abs(m.cdf(x, 1.0) - x) <= 1e-10);
      REQUIRE(std::abs(m.cdf(1.0, x) - x) <= 1e-10);
    }
    CHECK(m.cdf(0.0, 0.3) == 0.0);
  }
}

TEST_CASE("cdf equals integrated density at interior points") {
  auto m = fixture_model(1);
  for (double x : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double y : {0.1, 0.3, 0.5, 0.7, 0.9}) CHECK(std::abs(m.cdf(x, y) - quad_mass(m, x, y)) < 1e-6);
  CHECK(std::abs(m.cdf(0.5, 0.5) - quad_mass(m, 0.5, 0.5)) < 1e-12);
}

TEST_CASE("density grid matches pointwise evaluation") {
  auto m = fixture_model(3);
  std::vector<double> xs{0.0, 0.13, 0.5, 0.77, 1.0}, ys{0.0, 0.4, 0.6, 1.0};
  auto g = m.density_grid({xs, ys});
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      CHECK(g[i * ys.size() + j] == doctest::Approx(m.density(xs[i], ys[j])).epsilon(1e-13));
}

TEST_CASE("points outside the unit cube are rejected") {
  auto m = fixture_model(1);
  CHECK_THROWS_AS(m.density(1.1, 0.5), Error);
  CHECK_THROWS_AS(m.cdf(0.5, -0.1), Error);
  std::vector<double> p3{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(m.density(p3), Error);
}

TEST_CASE("trivariate bernstein density matches the binomial form") {
  auto m = baker_model(5, 5, 2);
  auto rep = validate(m.params(), m.bases());
  CHECK(rep.max_residual() < 1e-15);
  auto bern = [](int n, int k, double x) {
    const double binom = std::tgamma(n + 1) / (std::tgamma(k + 1) * std::tgamma(n - k + 1));
    return binom * std::pow(x, k) * std::pow(1 - x, n - k);
  };
  const std::vector<int> n{5, 5, 2};
  for (double u : {0.1, 0.5, 0.9})
    for (double v : {0.0, 0.3, 1.0})
      for (double w : {0.2, 0.7}) {
        double want = 0.0;
        for (int a = 0; a < 5; ++a)
          for (int b = 0; b < 5; ++b)
            for (int c = 0; c < 2; ++c) {
              const double r = m.params()[(a * 5 + b) * 2 + c];
              // phi = n * b_{k, n-1}
              want += r * n[0] * bern(4, a, u) * n[1] * bern(4, b, v) * n[2] * bern(1, c, w);
            }
        const double pt[3] = {u, v, w};
        CHECK(std::abs(m.density(pt) - want) < 1e-12);
      }
  // slab masses
  double slab0 = 0.0, slab1 = 0.0;
  for (std::size_t i = 0; i < m.params().size(); ++i) (i % 2 == 0 ? slab0 : slab1) += m.params()[i];
  CHECK(slab0 == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(slab1 == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("trivariate cdf margins are uniform") {
  auto m = baker_model(4, 4, 2);
  for (double x : {0.0, 0.2, 0.55, 1.0}) {
    const double a[3] = {x, 1.0, 1.0}, b[3] = {1.0, x, 1.0}, c[3] = {1.0, 1.0, x};
    CHECK(std::abs(m.cdf(a) - x) < 1e-12);
    CHECK(std::abs(m.cdf(b) - x) < 1e-12);
    CHECK(std::abs(m.cdf(c) - x) < 1e-12);
  }
}
