#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bspcop/io.hpp"
#include "bspcop/sample.hpp"
#include "bspcop/studies.hpp"

using namespace bspcop;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(BSPCOP_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("bspcop_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_fixture_data(const fs::path& dir, std::size_t N) {
  auto data = fixture_datasets(1, N, 1, 5)[0];
  auto path = dir / "data.csv";
  std::ofstream out(path);
  write_csv(out, {"u", "v"}, data);
  return path;
}

}  // namespace

TEST_CASE("cli: usage errors") {
  auto dir = scratch("usage");
  {
    std::ofstream one(dir / "one.csv");
    one << "x,y\n1,2\n";
  }
  CHECK(run("fit " + (dir / "one.csv").string() + " --size 4,5") == 2);
  CHECK(run("") == 2);
  CHECK(run("fit") == 2);
  CHECK(run("fit " + (dir / "missing.csv").string() + " --size 4,5") == 2);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "x,y\n";
    for (int i = 0; i < 12; ++i) bad << i << "," << (i == 7 ? "oops" : "1") << "\n";
  }
  CHECK(run("fit " + (dir / "bad.csv").string() + " --size 4,5") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("cli: fit, sample and grid round trip") {
  auto dir = scratch("fit");
  auto data = write_fixture_data(dir, 1000);
  const auto out = (dir / "fit").string();
  REQUIRE(run("fit " + data.string() + " --size 4,5 --alpha 0.1 --beta 3 --pseudo identity --out " + out) == 0);
  auto rep = read_json_file(out + "/fit_report.json");
  CHECK(rep["converged"] == true);
  CHECK(rep["max_constraint_residual"].get<double>() <= 1e-8);
  CHECK(rep["resolved_config"]["alpha"] == "0.1");
  auto model = model_from_json(read_json_file(out + "/model.json"));
  CHECK(validate(model.params(), model.bases()).max_residual() <= 1e-8);

  const auto out0 = (dir / "fit0").string();
  REQUIRE(run("fit " + data.string() + " --size 4,5 --out " + out0) == 0);
  auto rep0 = read_json_file(out0 + "/fit_report.json");
  CHECK(rep0["lp_trajectory"] == rep0["lpstar_trajectory"]);

  // a tiny iteration cap reports non-convergence
  CHECK(run("fit " + data.string() + " --size 4,5 --max-iters 3 --out " + (dir / "cap").string()) == 3);

  const auto sdir = (dir / "sample").string();
  REQUIRE(run("sample " + out + "/model.json -n 300 --seed 9 --out " + sdir) == 0);
  const auto first = slurp(sdir + "/sample.csv");
  REQUIRE(run("sample " + out + "/model.json -n 300 --seed 9 --out " + sdir) == 0);
  CHECK(slurp(sdir + "/sample.csv") == first);
  CHECK(std::count(first.begin(), first.end(), '\n') == 301);

  const auto gdir = (dir / "grid").string();
  REQUIRE(run("density-grid " + out + "/model.json --grid 11 --data " + data.string() + " --out " + gdir) == 0);
  auto grid = read_csv_file(gdir + "/copula_grid.csv");
  CHECK(grid.rows == 121);
  auto joint = read_csv_file(gdir + "/joint_grid.csv");
  CHECK(joint.rows == 121);
  for (std::size_t r = 0; r < joint.rows; ++r) CHECK(joint(r, 2) >= 0.0);
  for (std::size_t r = 0; r < grid.rows; ++r)
    CHECK(grid(r, 2) == doctest::Approx(model.density(grid(r, 0), grid(r, 1))).epsilon(1e-15));
}

TEST_CASE("cli: independence grid is flat") {
  auto dir = scratch("indep");
  auto ind = independence_model({BasisSystem::uniform(3, 4), BasisSystem::uniform(3, 5)});
  write_json_file((dir / "ind.json").string(), model_to_json(ind));
  REQUIRE(run("density-grid " + (dir / "ind.json").string() + " --grid 7 --out " + dir.string()) == 0);
  auto grid = read_csv_file((dir / "copula_grid.csv").string());
  CHECK(grid.rows == 49);
  for (std::size_t r = 0; r < grid.rows; ++r) CHECK(std::abs(grid(r, 2) - 1.0) < 1e-12);
}

TEST_CASE("cli: select is seed-deterministic and config values yield to flags") {
  auto dir = scratch("select");
  auto data = write_fixture_data(dir, 300);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "alpha = 0, 0.1\nbeta = 3\nfolds = 3\nmax-iters = 400\npseudo = identity\nsize = 4,4;4,5\n";
  }
  const std::string base = "select " + data.string() + " --config " + (dir / "run.cfg").string() + " --seed 4";
  REQUIRE(run(base + " --out " + (dir / "a").string()) == 0);
  REQUIRE(run(base + " --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a/selection.csv") == slurp(dir / "b/selection.csv"));
  auto summary = read_json_file((dir / "a/selection.json").string());
  CHECK(summary["cv"].size() == 4);
  CHECK(summary["aic"].size() == 2);
  CHECK(summary["resolved_config"]["folds"] == 3);

  REQUIRE(run(base + " --folds 2 --out " + (dir / "c").string()) == 0);
  auto over = read_json_file((dir / "c/selection.json").string());
  CHECK(over["resolved_config"]["folds"] == 2);
  CHECK(over["cv"][0]["fold_scores"].size() == 2);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "colour = blue\n";
  }
  CHECK(run("select " + data.string() + " --size 4,5 --config " + (dir / "bad.cfg").string()) == 2);
}
