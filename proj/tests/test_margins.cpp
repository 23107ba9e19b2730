#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "bspcop/copula.hpp"
#include "bspcop/error.hpp"
#include "bspcop/margins.hpp"
#include "bspcop/quadrature.hpp"
#include "bspcop/rng.hpp"

using namespace bspcop;

namespace {

Matrix column(std::vector<double> v) {
  Matrix m(v.size(), 1);
  m.data = std::move(v);
  return m;
}

std::vector<double> normal_draws(std::size_t n, std::uint64_t seed) {
  Philox rng(seed, 0);
  std::vector<double> out(n);
  for (auto& x : out) x = normal_quantile(rng.uniform());
  return out;
}

}  // namespace

TEST_CASE("pseudo-observations: ranks over N+1") {
  auto p = pseudo_observations(column({3, 1, 2}));
  CHECK(p.points(0, 0) == 0.75);
  CHECK(p.points(1, 0) == 0.25);
  CHECK(p.points(2, 0) == 0.5);

  auto tie = pseudo_observations(column({5, 5}));
  CHECK(tie.points(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(tie.points(1, 0) == doctest::Approx(2.0 / 3).epsilon(1e-15));

  auto big = pseudo_observations(column(normal_draws(1000, 4)));
  double hi = 0.0, sum = 0.0;
  for (double u : big.points.data) {
    hi = std::max(hi, u);
    sum += u;
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(hi == doctest::Approx(1000.0 / 1001).epsilon(1e-15));
  CHECK(sum / 1000 == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pseudo-observations reject bad input") {
  CHECK_THROWS_AS(pseudo_observations(column({1.0, std::numeric_limits<double>::quiet_NaN()})), Error);
  CHECK_THROWS_AS(pseudo_observations(column({1.0})), Error);
  CHECK_THROWS_AS(identity_observations(column({0.5, 1.5})), Error);
  CHECK_NOTHROW(identity_observations(column({0.0, 1.0})));
}

TEST_CASE("rescaled ECDF") {
  MarginalModel m({1, 2, 3});
  CHECK(m.ecdf(2.5) == 0.5);
  CHECK(m.ecdf(0.0) == 0.0);
  CHECK(m.ecdf(3.0) == 0.75);
  CHECK(m.ecdf(100.0) == 0.75);
  CHECK(m.ecdf(2.0) == 0.5);
  double prev = 0.0;
  for (double x = -1; x < 5; x += 0.01) {
    REQUIRE(m.ecdf(x) >= prev);
    prev = m.ecdf(x);
  }
}

TEST_CASE("kernel density") {
  MarginalModel m(normal_draws(1000, 9));
  CHECK(std::abs(m.kde(0.0) - 0.3989) < 0.05);
  CHECK(m.bandwidth() > 0.0);

  const double lo = m.sorted().front() - 8 * m.bandwidth(), hi = m.sorted().back() + 8 * m.bandwidth();
  double mass = 0.0;
  const int pieces = 400;
  for (int i = 0; i < pieces; ++i) {
    const double a = lo + (hi - lo) * i / pieces, b = lo + (hi - lo) * (i + 1) / pieces;
    mass += integrate([&](double x) { return m.kde(x); }, a, b, 10);
  }
  CHECK(std::abs(mass - 1.0) < 1e-3);

  MarginalModel sym({-2, -1, 0.5, 1.5, 3, 4.5, 5.5, 7, 8});  // symmetric about 3
  for (double d : {0.1, 0.7, 2.0, 5.0}) CHECK(sym.kde(3 + d) == doctest::Approx(sym.kde(3 - d)).epsilon(1e-12));

  MarginalModel flat({2, 2, 2});
  CHECK(flat.bandwidth() == 0.0);
  CHECK_THROWS_AS(flat.kde(2.0), Error);
}

TEST_CASE("silverman bandwidth uses the smaller scale") {
  // heavy outlier inflates the sd, so the IQR guard wins
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8, 9, 1000};
  MarginalModel m(x);
  // type-7 quartiles of the sorted sample: 3.25 and 7.75
  const double iqr = 7.75 - 3.25;
  CHECK(m.bandwidth() == doctest::Approx(1.06 * iqr / 1.34 * std::pow(10.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("normal quantile") {
  CHECK(std::abs(normal_quantile(0.5)) < 1e-15);
  // bisection on the CDF as an independent oracle
  double lo = 0.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < 0.975 ? lo : hi) = mid;
  }
  CHECK(std::abs(normal_quantile(0.975) - lo) < 1e-9);
  CHECK(std::abs(normal_quantile(0.975) - 1.959964) < 1e-6);
  for (double x = -5.0; x <= 5.0; x += 0.01) REQUIRE(std::abs(normal_quantile(normal_cdf(x)) - x) < 1e-8);
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("joint density factorizes under independence") {
  Matrix data(200, 2);
  auto a = normal_draws(200, 1), b = normal_draws(200, 2);
  for (std::size_t t = 0; t < 200; ++t) {
    data(t, 0) = a[t];
    data(t, 1) = 3 * b[t] + 1;
  }
  auto margins = fit_margins(data);
  auto ind = independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 5)});
  for (int i = 0; i <= 100; i += 5)
    for (int j = 0; j <= 100; j += 5) {
      const double pt[2] = {-3 + 0.06 * i, -8 + 0.18 * j};
      const double want = margins[0].kde(pt[0]) * margins[1].kde(pt[1]);
      const double got = joint_density(ind, margins, pt);
      CHECK(got >= 0.0);
      CHECK(std::abs(got - want) <= 1e-15 * std::max(1.0, want) + 1e-13 * want);
    }
}
