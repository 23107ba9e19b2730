#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <set>
#include <vector>

#include "bspcop/error.hpp"
#include "bspcop/sample.hpp"
#include "bspcop/select.hpp"
#include "bspcop/studies.hpp"

using namespace bspcop;

TEST_CASE("fold partition") {
  for (int M : {2, 5, 7}) {
    auto folds = fold_partition(103, M, 9);
    REQUIRE(folds.size() == static_cast<std::size_t>(M));
    std::set<std::size_t> seen;
    std::size_t lo = 1000, hi = 0;
    for (const auto& f : folds) {
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
      for (auto i : f) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 103);
    CHECK(*seen.rbegin() == 102);
    CHECK(hi - lo <= 1);
  }
  CHECK(fold_partition(50, 5, 1) == fold_partition(50, 5, 1));
  CHECK(fold_partition(50, 5, 1) != fold_partition(50, 5, 2));
  CHECK_THROWS_AS(fold_partition(3, 4, 1), Error);
}

TEST_CASE("grid validation") {
  SelectionGrid g;
  g.sizes = {{4, 5}};
  CHECK_NOTHROW(g.validate(100));
  g.folds = 1;
  CHECK_THROWS_AS(g.validate(100), Error);
  g.folds = 200;
  CHECK_THROWS_AS(g.validate(100), Error);
  g.folds = 5;
  g.betas = {2.0};
  CHECK_THROWS_AS(g.validate(100), Error);
  g.betas = {3.0};
  g.alphas.clear();
  CHECK_THROWS_AS(g.validate(100), Error);
}

TEST_CASE("effective parameters and AIC of an independence fit") {
  CHECK(effective_parameters(std::vector<int>{4, 5}) == 12);
  CHECK(effective_parameters(std::vector<int>{20, 20, 2}) == 800 - 1 - 19 - 19 - 1);
  auto data = generate_study_data(independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 4)}), 300, 1, 3)[0];
  auto sample = identity_observations(data);
  for (auto [m, n] : std::vector<std::pair<int, int>>{{4, 5}, {4, 4}, {5, 7}, {6, 4}, {8, 8}}) {
    auto ind = independence_model({BasisSystem::uniform(3, m), BasisSystem::uniform(3, n)});
    CHECK(pseudo_aic(ind.params(), sample, ind.bases()) == doctest::Approx(2.0 * (m - 1) * (n - 1)).epsilon(1e-12));
  }
  auto ind45 = independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 5)});
  CHECK(std::abs(pseudo_aic(ind45.params(), sample, ind45.bases()) - 24.0) < 1e-9);
}

TEST_CASE("mse") {
  auto truth = fixture_model(1).params();
  std::vector<ParamTensor> same{truth, truth};
  CHECK(mse(same, truth) == 0.0);
  ParamTensor moved = truth;
  moved[3] += 0.1;
  std::vector<ParamTensor> one{moved};
  CHECK(mse(one, truth) == doctest::Approx(0.01).epsilon(1e-12));
  std::vector<ParamTensor> ab{moved, truth}, ba{truth, moved};
  CHECK(mse(ab, truth) == mse(ba, truth));
  std::vector<ParamTensor> wrong{fixture_model(3).params()};
  CHECK_THROWS_AS(mse(wrong, truth), Error);
  CHECK_THROWS_AS(mse(std::vector<ParamTensor>{}, truth), Error);
}

TEST_CASE("joint-density mse") {
  Matrix pts(10, 2, 0.3);
  DensityFn h = [](std::span<const double> x) { return x[0] + x[1]; };
  DensityFn shifted = [](std::span<const double> x) { return x[0] + x[1] + 0.2; };
  CHECK(mse_joint_density(h, h, pts) == 0.0);
  CHECK(mse_joint_density(shifted, h, pts) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("cross-validation on independent data scores near zero") {
  auto ind = independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 4)});
  auto data = generate_study_data(ind, 500, 1, 12)[0];
  SelectionGrid g;
  g.alphas = {0.0};
  g.betas = {3.7};
  g.sizes = {{4, 4}};
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::identity;
  setup.fit.max_outer_iters = 500;
  auto rep = cross_validate(data, g, setup);
  REQUIRE(rep.cv.size() == 1);
  CHECK(rep.cv[0].valid);
  for (double s : rep.cv[0].fold_scores) CHECK(std::abs(s) < 0.1);
  CHECK(rep.best_cv.has_value());
}

TEST_CASE("cross-validation is deterministic and thread-count invariant") {
  auto data = fixture_datasets(1, 300, 1, 4)[0];
  SelectionGrid g;
  g.alphas = {0.0, 0.1};
  g.betas = {3.0};
  g.sizes = {{4, 5}, {4, 4}};
  g.folds = 3;
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::rank;
  setup.fit.max_outer_iters = 300;
  auto a = cross_validate(data, g, setup);
  setup.threads = 3;
  auto b = cross_validate(data, g, setup);
  REQUIRE(a.cv.size() == 4);
  for (std::size_t i = 0; i < a.cv.size(); ++i) {
    CHECK(a.cv[i].fold_scores == b.cv[i].fold_scores);
    CHECK(a.cv[i].valid);
    CHECK(a.cv[i].score == doctest::Approx(std::accumulate(a.cv[i].fold_scores.begin(), a.cv[i].fold_scores.end(), 0.0)));
  }
  CHECK(a.best_cv == b.best_cv);
}

TEST_CASE("a failing cell is marked invalid without aborting the sweep") {
  auto data = fixture_datasets(1, 100, 1, 4)[0];
  SelectionGrid g;
  g.alphas = {0.0};
  g.betas = {3.0};
  g.sizes = {{4, 5}, {2, 5}};  // count 2 < degree + 1
  g.folds = 2;
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::identity;
  setup.fit.max_outer_iters = 50;
  auto rep = cross_validate(data, g, setup);
  CHECK(rep.cv[0].valid);
  CHECK_FALSE(rep.cv[1].valid);
  CHECK(std::isnan(rep.cv[1].score));
  CHECK(rep.best_cv == std::optional<std::size_t>(0));
  CHECK_FALSE(rep.cv[1].fold_errors[0].empty());
}

TEST_CASE("size selection by AIC") {
  auto data = fixture_datasets(1, 1000, 1, 31)[0];
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::identity;
  auto rep = select_size(data, {{4, 4}, {4, 5}, {5, 5}}, 0.0, 3.7, setup, SizeCriterion::aic);
  REQUIRE(rep.aic.size() == 3);
  for (const auto& c : rep.aic) CHECK(c.valid);
  REQUIRE(rep.best_aic.has_value());
  CHECK(rep.aic[*rep.best_aic].size == std::vector<int>{4, 5});
}

TEST_CASE("pseudo mode parsing") {
  CHECK(parse_pseudo_mode("rank") == PseudoMode::rank);
  CHECK(parse_pseudo_mode("identity") == PseudoMode::identity);
  CHECK_THROWS_AS(parse_pseudo_mode("ranks"), Error);
}
