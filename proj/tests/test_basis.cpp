#include <doctest.h>

#include <cmath>
#include <vector>

#include "bspcop/basis.hpp"
#include "bspcop/error.hpp"
#include "bspcop/quadrature.hpp"

using namespace bspcop;

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
  for (int n = 1; n <= 20; ++n) {
    const auto& rule = gauss_legendre(n);
    double wsum = 0.0;
    for (double w : rule.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    // degree 2n-1 is the highest exact degree
    const int deg = 2 * n - 1;
    const double exact = (deg % 2 == 0) ? 2.0 / (deg + 1) : 0.0;
    double got = integrate([&](double x) { return std::pow(x, deg) + 1.0; }, -1.0, 1.0, n);
    CHECK(std::abs(got - (exact + 2.0)) < 1e-13);
  }
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, 12) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
}

TEST_CASE("uniform basis: knots and weights from the examples") {
  auto b34 = BasisSystem::uniform(3, 4);
  std::vector<double> k34{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(std::vector<double>(b34.knots().begin(), b34.knots().end()) == k34);
  for (double q : b34.weights()) CHECK(q == 0.25);

  auto b35 = BasisSystem::uniform(3, 5);
  CHECK(b35.knots()[4] == 0.5);
  CHECK(b35.interior_knots() == 1);
  std::vector<double> q35{0.125, 0.25, 0.25, 0.25, 0.125};
  CHECK(std::vector<double>(b35.weights().begin(), b35.weights().end()) == q35);

  auto b12 = BasisSystem::uniform(1, 2);
  CHECK(b12.weights()[0] == 0.5);
  CHECK(b12.weights()[1] == 0.5);

  auto b24 = BasisSystem::uniform(2, 4);
  CHECK(b24.weights()[0] == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(b24.weights()[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(b24.weights()[2] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(b24.weights()[3] == doctest::Approx(1.0 / 6).epsilon(1e-15));
}

TEST_CASE("invalid sizes are rejected") {
  CHECK_THROWS_AS(BasisSystem::uniform(3, 3), Error);
  CHECK_THROWS_AS(BasisSystem::uniform(-1, 3), Error);
  CHECK_THROWS_AS(BasisSystem::uniform(kMaxDegree + 1, kMaxDegree + 2), Error);
  try {
    BasisSystem::uniform(3, 2);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_dimension);
  }
  auto b = BasisSystem::uniform(3, 5);
  CHECK_THROWS_AS(b.bspline(5, 0.5), Error);
  CHECK_THROWS_AS(b.phi(-1, 0.5), Error);
}

TEST_CASE("point values") {
  CHECK(BasisSystem::uniform(3, 4).bspline(1, 0.5) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(BasisSystem::uniform(1, 2).bspline(0, 0.25) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(BasisSystem::uniform(1, 2).phi(0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(BasisSystem::uniform(3, 4).phi(0, 0.0) == doctest::Approx(4.0).epsilon(1e-15));
  // right-endpoint convention
  auto b = BasisSystem::uniform(3, 7);
  CHECK(b.bspline(6, 1.0) == 1.0);
  CHECK(b.bspline(5, 1.0) == 0.0);
}

TEST_CASE("cumulative functions") {
  CHECK(BasisSystem::uniform(1, 2).Phi(0, 0.5) == doctest::Approx(0.75).epsilon(1e-14));
  // closed form of 4(1-x)^3 integrated to 0.5: 1 - (1-x)^4
  CHECK(std::abs(BasisSystem::uniform(3, 4).Phi(0, 0.5) - 0.9375) < 1e-14);
  for (int d = 1; d <= 4; ++d)
    for (int m = d + 1; m <= d + 8; ++m) {
      auto b = BasisSystem::uniform(d, m);
      for (int k = 0; k < m; ++k) {
        CHECK(b.Phi(k, 0.0) == 0.0);
        CHECK(std::abs(b.Phi(k, 1.0) - 1.0) <= 1e-12);
        double prev = 0.0;
        for (int i = 0; i <= 1000; ++i) {
          double v = b.Phi(k, i / 1000.0);
          REQUIRE(v >= prev - 1e-15);
          prev = v;
        }
      }
    }
}

TEST_CASE("Phi agrees with high-order quadrature of phi") {
  auto b = BasisSystem::uniform(3, 6);
  std::vector<double> all(b.count());
  for (double x : {0.05, 0.3, 0.3333333, 0.5, 0.71, 0.99}) {
    b.Phi_all(x, all);
    for (int k = 0; k < b.count(); ++k) {
      // integrate span by span so every piece is a polynomial
      double want = 0.0;
      auto t = b.knots();
      for (std::size_t s = 0; s + 1 < t.size(); ++s) {
        double lo = t[s], hi = std::min(t[s + 1], x);
        if (hi > lo) want += integrate([&](double u) { return b.phi(k, u); }, lo, hi, 16);
      }
      CHECK(std::abs(b.Phi(k, x) - want) < 1e-13);
      CHECK(all[k] == doctest::Approx(b.Phi(k, x)).epsilon(1e-15));
    }
  }
}

TEST_CASE("partition of unity, weights and local support") {
  for (int d = 1; d <= 4; ++d)
    for (int m = d + 1; m <= d + 8; ++m) {
      auto b = BasisSystem::uniform(d, m);
      double qsum = 0.0;
      for (double q : b.weights()) qsum += q;
      CHECK(std::abs(qsum - 1.0) <= 1e-12);

      auto quad = basis_integrals_by_quadrature(b);
      for (int k = 0; k < m; ++k) CHECK(std::abs(quad[k] - b.weights()[k]) <= 1e-12);

      for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        double s = 0.0, sq = 0.0;
        for (int k = 0; k < m; ++k) {
          const double v = b.bspline(k, x);
          s += v;
          sq += b.weights()[k] * b.phi(k, x);
          const bool inside = x >= b.knots()[k] && x <= b.knots()[k + d + 1];
          if (!inside) REQUIRE(v == 0.0);
        }
        REQUIRE(std::abs(s - 1.0) <= 1e-12);
        REQUIRE(std::abs(sq - 1.0) <= 1e-12);
      }
    }
}

TEST_CASE("active window matches the full evaluation") {
  auto b = BasisSystem::uniform(3, 9);
  std::vector<double> vals(4);
  for (double x : {0.0, 0.1, 1.0 / 6, 0.5, 0.999, 1.0}) {
    const int first = b.eval_active(x, vals);
    for (int k = 0; k < b.count(); ++k) {
      const double direct = b.bspline(k, x);
      const double windowed = (k >= first && k <= first + 3) ? vals[k - first] : 0.0;
      CHECK(std::abs(direct - windowed) < 1e-15);
    }
  }
}

TEST_CASE("bernstein case matches binomial polynomials") {
  const int n = 6;
  auto b = BasisSystem::uniform(n - 1, n);
  for (double x : {0.0, 0.2, 0.5, 0.8, 1.0})
    for (int k = 0; k < n; ++k) {
      const double binom = std::tgamma(n) / (std::tgamma(k + 1) * std::tgamma(n - k));
      const double want = binom * std::pow(x, k) * std::pow(1 - x, n - 1 - k);
      CHECK(std::abs(b.bspline(k, x) - want) < 1e-13);
      CHECK(b.weights()[k] == doctest::Approx(1.0 / n).epsilon(1e-14));
    }
}
