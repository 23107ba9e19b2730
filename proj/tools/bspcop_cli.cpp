// bspcop: fit, select, sample and grid B-spline copulas from the command line.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bspcop/error.hpp"
#include "bspcop/io.hpp"
#include "bspcop/margins.hpp"
#include "bspcop/sample.hpp"
#include "bspcop/select.hpp"
#include "bspcop/studies.hpp"

using namespace bspcop;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitSamplerBudget = 4;

struct Options {
  std::string input;
  std::string model;
  std::string study = "all";
  std::string degree = "3";
  std::vector<std::string> sizes;
  std::string alpha = "0";
  std::string beta = "3.7";
  int folds = 5;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  int max_iters = 5000;
  double kkt_tol = 0.0;
  int grid = 201;
  int threads = 1;
  std::string pseudo = "rank";
  std::string out = ".";
  std::string cols;
  std::string data;
  std::string criterion = "both";
  std::size_t count = 1000;
  std::size_t reps = 0;
  std::size_t n = 0;
  std::string config;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

int to_int(const std::string& s, const std::string& what) {
  double v = to_double(s, what);
  if (v != std::floor(v)) throw UsageError(what + ": '" + s + "' is not an integer");
  return static_cast<int>(v);
}

std::vector<double> doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& t : split(s, ',')) out.push_back(to_double(t, what));
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

std::vector<int> ints(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& t : split(s, ',')) out.push_back(to_int(t, what));
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

std::vector<std::vector<int>> parse_sizes(const std::vector<std::string>& raw) {
  std::vector<std::vector<int>> out;
  for (const auto& r : raw)
    for (const auto& one : split(r, ';')) out.push_back(ints(one, "--size"));
  return out;
}

std::vector<int> degrees_for(const std::string& spec, std::size_t D) {
  auto d = ints(spec, "--degree");
  if (d.size() == 1) d.assign(D, d.front());
  if (d.size() != D)
    throw UsageError("--degree needs 1 or " + std::to_string(D) + " values, got " + std::to_string(d.size()));
  return d;
}

FitConfig fit_config(const Options& o) {
  FitConfig cfg;
  cfg.outer_tol = o.tol;
  cfg.max_outer_iters = o.max_iters;
  cfg.kkt_tol = o.kkt_tol;
  return cfg;
}

json echo(const Options& o, const std::string& command) {
  return json{{"command", command}, {"input", o.input},     {"model", o.model},       {"degree", o.degree},
              {"size", o.sizes},    {"alpha", o.alpha},     {"beta", o.beta},         {"folds", o.folds},
              {"seed", o.seed},     {"tol", o.tol},         {"max_iters", o.max_iters}, {"kkt_tol", o.kkt_tol},
              {"grid", o.grid},     {"threads", o.threads}, {"pseudo", o.pseudo},     {"cols", o.cols},
              {"data", o.data},     {"criterion", o.criterion}, {"count", o.count},   {"reps", o.reps},
              {"n", o.n},           {"out", o.out},         {"study", o.study}};
}

fs::path out_dir(const Options& o) {
  fs::path p(o.out);
  fs::create_directories(p);
  return p;
}

Matrix load_data(const Options& o) {
  Matrix m = read_csv_file(o.input, split(o.cols, ','));
  if (m.cols < 2) throw UsageError("input needs at least two numeric columns");
  if (m.rows < 10) throw UsageError("input needs at least 10 rows, found " + std::to_string(m.rows));
  return m;
}

void write_matrix(const fs::path& path, const std::vector<std::string>& header, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::invalid_argument, "cannot write '" + path.string() + "'");
  write_csv(out, header, m);
}

// ---------------------------------------------------------------------------

int cmd_fit(const Options& o) {
  const Matrix data = load_data(o);
  const std::size_t D = data.cols;
  const auto sizes = parse_sizes(o.sizes);
  if (sizes.size() != 1 || sizes.front().size() != D)
    throw UsageError("fit needs exactly one --size with " + std::to_string(D) + " counts");
  const auto alphas = doubles(o.alpha, "--alpha");
  const auto betas = doubles(o.beta, "--beta");
  if (alphas.size() != 1 || betas.size() != 1) throw UsageError("fit takes a single --alpha and --beta");

  const auto bases = make_bases(degrees_for(o.degree, D), sizes.front());
  const PseudoSample sample = to_pseudo(data, parse_pseudo_mode(o.pseudo));
  FitReport rep = fit_nd(sample, bases, ScadParams{alphas[0], betas[0]}, fit_config(o));

  const auto dir = out_dir(o);
  json report = fit_report_to_json(rep);
  report["seed"] = o.seed;
  report["resolved_config"] = echo(o, "fit");
  write_json_file((dir / "fit_report.json").string(), report);
  write_json_file((dir / "model.json").string(), model_to_json(CopulaModel(bases, rep.params)));
  std::cout << "iterations " << rep.iterations << ", converged " << (rep.converged ? "yes" : "no")
            << ", kkt residual " << format_double(rep.kkt_residual) << "\n";
  return rep.converged ? kExitOk : kExitNoConvergence;
}

int cmd_select(const Options& o) {
  const Matrix data = load_data(o);
  const std::size_t D = data.cols;
  auto sizes = parse_sizes(o.sizes);
  if (sizes.empty()) throw UsageError("select needs at least one --size");
  for (const auto& s : sizes)
    if (s.size() != D) throw UsageError("every --size needs " + std::to_string(D) + " counts");
  if (o.criterion != "cv" && o.criterion != "aic" && o.criterion != "both")
    throw UsageError("--criterion must be cv, aic or both");

  SelectionSetup setup;
  setup.degrees = degrees_for(o.degree, D);
  setup.mode = parse_pseudo_mode(o.pseudo);
  setup.fit = fit_config(o);
  setup.threads = o.threads;

  SelectionGrid grid;
  grid.alphas = doubles(o.alpha, "--alpha");
  grid.betas = doubles(o.beta, "--beta");
  grid.sizes = sizes;
  grid.folds = o.folds;
  grid.seed = o.seed;

  SelectionReport rep;
  if (o.criterion != "aic") rep = cross_validate(data, grid, setup);
  if (o.criterion != "cv") {
    // The AIC sweep runs at the first (alpha, beta) pair of the grid.
    auto aic = select_size(data, sizes, grid.alphas[0], grid.betas[0], setup, SizeCriterion::aic);
    rep.aic = std::move(aic.aic);
    rep.best_aic = aic.best_aic;
  }

  const auto dir = out_dir(o);
  {
    std::ofstream csv(dir / "selection.csv");
    write_selection_csv(csv, rep);
  }
  json summary = selection_to_json(rep);
  summary["resolved_config"] = echo(o, "select");
  write_json_file((dir / "selection.json").string(), summary);

  if (rep.best_cv) {
    const auto& c = rep.cv[*rep.best_cv];
    std::cout << "best CV: size " << json(c.size).dump() << " alpha " << c.alpha << " beta " << c.beta << " score "
              << format_double(c.score) << "\n";
  }
  if (rep.best_aic) {
    const auto& c = rep.aic[*rep.best_aic];
    std::cout << "best AIC: size " << json(c.size).dump() << " score " << format_double(c.score) << "\n";
  }
  return kExitOk;
}

int cmd_sample(const Options& o) {
  const CopulaModel model = model_from_json(read_json_file(o.model));
  if (o.count < 1) throw UsageError("--count must be positive");
  SamplerConfig cfg;
  cfg.seed = o.seed;
  cfg.grid_resolution = o.grid;
  cfg.threads = o.threads;
  cfg.validate();
  SampleRun run = rejection_sample(model, o.count, cfg);

  const auto dir = out_dir(o);
  std::vector<std::string> header;
  for (int j = 0; j < model.dimension(); ++j) header.push_back("u" + std::to_string(j + 1));
  write_matrix(dir / "sample.csv", header, run.points);
  json summary{{"count", o.count},
               {"proposals", run.proposals},
               {"accepted", run.accepted},
               {"acceptance_rate", run.acceptance_rate()},
               {"grid_max", run.grid_max},
               {"envelope", run.envelope},
               {"restarts", run.restarts},
               {"resolved_config", echo(o, "sample")}};
  write_json_file((dir / "sample.json").string(), summary);
  std::cout << "drew " << o.count << " points, acceptance rate " << format_double(run.acceptance_rate()) << "\n";
  return kExitOk;
}

int cmd_density_grid(const Options& o) {
  const CopulaModel model = model_from_json(read_json_file(o.model));
  const int D = model.dimension();
  if (o.grid < 2) throw UsageError("--grid must be at least 2");
  const auto G = static_cast<std::size_t>(o.grid);
  std::vector<double> axis(G);
  for (std::size_t i = 0; i < G; ++i) axis[i] = static_cast<double>(i) / static_cast<double>(G - 1);
  const std::vector<std::vector<double>> axes(D, axis);
  const auto dens = model.density_grid(axes);

  const auto dir = out_dir(o);
  Matrix cop(dens.size(), D + 1);
  for (std::size_t r = 0; r < dens.size(); ++r) {
    std::size_t rest = r;
    for (int j = D - 1; j >= 0; --j) {
      cop(r, j) = axis[rest % G];
      rest /= G;
    }
    cop(r, D) = dens[r];
  }
  std::vector<std::string> header = D == 2 ? std::vector<std::string>{"u", "v"} : std::vector<std::string>{};
  if (D != 2)
    for (int j = 0; j < D; ++j) header.push_back("u" + std::to_string(j + 1));
  header.push_back("density");
  write_matrix(dir / "copula_grid.csv", header, cop);

  if (!o.data.empty()) {
    if (D != 2) throw UsageError("joint-density grids are written for two-axis models only");
    const Matrix data = read_csv_file(o.data, split(o.cols, ','));
    if (data.cols != 2) throw UsageError("--data needs exactly two columns (use --cols)");
    const auto margins = fit_margins(data);
    Matrix joint(G * G, 3);
    std::vector<double> xs(G), ys(G);
    for (int j = 0; j < 2; ++j) {
      const auto s = margins[j].sorted();
      const double lo = s.front(), hi = s.back();
      for (std::size_t i = 0; i < G; ++i) (j == 0 ? xs : ys)[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(G - 1);
    }
    for (std::size_t a = 0; a < G; ++a)
      for (std::size_t b = 0; b < G; ++b) {
        const double pt[2] = {xs[a], ys[b]};
        const std::size_t r = a * G + b;
        joint(r, 0) = xs[a];
        joint(r, 1) = ys[b];
        joint(r, 2) = joint_density(model, margins, pt);
      }
    write_matrix(dir / "joint_grid.csv", {"x", "y", "h"}, joint);
  }
  std::cout << "wrote " << dens.size() << " grid points to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce

std::size_t argmin_index(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

std::size_t argmax_index(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

bool interior(double a, const std::vector<double>& alphas) {
  return a > alphas.front() && a < alphas.back();
}

void write_surface_csv(const fs::path& path, const std::vector<MseSurface>& surfaces) {
  std::ofstream out(path);
  out << "fixture,N,alpha,beta,mse,unconverged,failed\n";
  for (const auto& s : surfaces)
    for (std::size_t a = 0; a < s.alphas.size(); ++a)
      for (std::size_t b = 0; b < s.betas.size(); ++b) {
        const std::size_t c = a * s.betas.size() + b;
        out << s.fixture << ',' << s.N << ',' << format_double(s.alphas[a]) << ',' << format_double(s.betas[b]) << ','
            << format_double(s.mse[c]) << ',' << s.unconverged[c] << ',' << s.failed[c] << '\n';
      }
}

json study_one(const Options& o, const fs::path& dir, const std::vector<double>& alphas,
               const std::vector<double>& betas, const StudyOptions& opt) {
  const std::size_t J = o.reps ? o.reps : 20, N = o.n ? o.n : 1000;
  std::vector<MseSurface> surfaces;
  json checks;
  for (int f = 1; f <= 3; ++f) {
    auto s = mse_surface(f, fixture_datasets(f, N, J, o.seed), alphas, betas, opt);
    const double best_alpha = s.alphas[argmin_index(s.mse) / s.betas.size()];
    const bool ok = f == 2 ? !interior(best_alpha, s.alphas) : interior(best_alpha, s.alphas);
    checks["R" + std::to_string(f)] = {{"argmin_alpha", best_alpha},
                                       {"expected", f == 2 ? "boundary alpha" : "interior alpha"},
                                       {"pass", ok}};
    surfaces.push_back(std::move(s));
  }
  write_surface_csv(dir / "study1_mse.csv", surfaces);
  return {{"J", J}, {"N", N}, {"checks", checks}};
}

json study_two(const Options& o, const fs::path& dir, const std::vector<double>& alphas,
               const std::vector<double>& betas, const StudyOptions& opt) {
  const std::size_t J = o.reps ? o.reps : 20, N = o.n ? o.n : 1000;
  std::ofstream out(dir / "study2_cv.csv");
  out << "fixture,alpha,beta,mean_cv,invalid\n";
  json checks;
  for (int f = 1; f <= 3; ++f) {
    auto s = cv_surface(f, fixture_datasets(f, N, J, o.seed), alphas, betas, o.folds, o.seed, opt);
    for (std::size_t a = 0; a < alphas.size(); ++a)
      for (std::size_t b = 0; b < betas.size(); ++b) {
        const std::size_t c = a * betas.size() + b;
        out << f << ',' << format_double(alphas[a]) << ',' << format_double(betas[b]) << ','
            << format_double(s.mean_cv[c]) << ',' << s.invalid[c] << '\n';
      }
    const double best_alpha = alphas[argmax_index(s.mean_cv) / betas.size()];
    const bool ok = f == 2 ? !interior(best_alpha, alphas) : interior(best_alpha, alphas);
    checks["R" + std::to_string(f)] = {{"argmax_alpha", best_alpha},
                                       {"expected", f == 2 ? "boundary alpha" : "interior alpha"},
                                       {"pass", ok}};
  }
  return {{"J", J}, {"N", N}, {"folds", o.folds}, {"checks", checks}};
}

json study_three(const Options& o, const fs::path& dir, const StudyOptions& opt) {
  const std::size_t J = o.reps ? o.reps : 20, N = o.n ? o.n : 1000;
  auto sizes = parse_sizes(o.sizes);
  if (sizes.empty())
    for (int m = 4; m <= 8; ++m)
      for (int n = 4; n <= 8; ++n) sizes.push_back({m, n});
  std::ofstream out(dir / "study3_size.csv");
  out << "fixture,m,n,mean_cv,sd_cv,mean_aic,sd_aic\n";
  const std::vector<std::vector<int>> expected = {{4, 5}, {4, 4}, {5, 5}};
  json checks;
  for (int f = 1; f <= 3; ++f) {
    auto t = size_tables(f, fixture_datasets(f, N, J, o.seed), sizes, o.folds, o.seed, opt);
    for (std::size_t s = 0; s < sizes.size(); ++s)
      out << f << ',' << sizes[s][0] << ',' << sizes[s][1] << ',' << format_double(t.mean_cv[s]) << ','
          << format_double(t.sd_cv[s]) << ',' << format_double(t.mean_aic[s]) << ',' << format_double(t.sd_aic[s])
          << '\n';
    const auto cv_best = sizes[argmax_index(t.mean_cv)];
    const auto aic_best = sizes[argmin_index(t.mean_aic)];
    bool ok;
    if (f == 2) {
      auto good = [](const std::vector<int>& s) { return s == std::vector<int>{4, 4} || s == std::vector<int>{4, 5}; };
      ok = good(cv_best) && good(aic_best);
    } else {
      ok = cv_best == expected[f - 1] && aic_best == expected[f - 1];
    }
    checks["R" + std::to_string(f)] = {{"cv_argmax", cv_best}, {"aic_argmin", aic_best}, {"pass", ok}};
  }
  return {{"J", J}, {"N", N}, {"folds", o.folds}, {"checks", checks}};
}

json study_four(const Options& o, const fs::path& dir, const StudyOptions& opt) {
  const std::size_t N = o.n ? o.n : 2000;
  auto st = trivariate_study(N, o.seed, opt);
  std::ofstream out(dir / "study4_mse.csv");
  out << "model,mse,max_constraint_residual,iterations,converged\n";
  json fits = json::array();
  bool ok = true;
  for (const auto& f : st.fits) {
    out << f.name << ',' << format_double(f.mse) << ',' << format_double(f.max_constraint_residual) << ','
        << f.iterations << ',' << int(f.converged) << '\n';
    const bool in_range = f.mse >= 1e-5 && f.mse <= 5e-4 && f.max_constraint_residual <= 1e-6;
    ok = ok && in_range;
    fits.push_back({{"model", f.name}, {"mse", f.mse}, {"max_constraint_residual", f.max_constraint_residual}});
  }
  return {{"N", N}, {"alpha", st.alpha}, {"beta", st.beta}, {"fits", fits}, {"pass", ok}};
}

json study_small(const Options& o, const fs::path& dir, const std::vector<double>& alphas,
                 const std::vector<double>& betas, const StudyOptions& opt) {
  const std::size_t J = o.reps ? o.reps : 10;
  std::vector<MseSurface> surfaces;
  json checks;
  for (int f = 1; f <= 3; ++f) {
    auto small = mse_surface(f, fixture_datasets(f, 100, J, o.seed), alphas, betas, opt);
    auto large = mse_surface(f, fixture_datasets(f, 300, J, o.seed), alphas, betas, opt);
    bool ok = true;
    for (std::size_t c = 0; c < small.mse.size(); ++c) ok = ok && large.mse[c] < small.mse[c];
    checks["R" + std::to_string(f)] = {{"elementwise_decrease", ok}, {"pass", ok}};
    surfaces.push_back(std::move(small));
    surfaces.push_back(std::move(large));
  }
  write_surface_csv(dir / "appendixC_mse.csv", surfaces);
  return {{"J", J}, {"N", {100, 300}}, {"checks", checks}};
}

int cmd_reproduce(const Options& o) {
  const std::vector<std::string> known{"I", "II", "III", "IV", "C", "all"};
  if (std::find(known.begin(), known.end(), o.study) == known.end())
    throw UsageError("study must be one of I, II, III, IV, C, all");
  StudyOptions opt;
  opt.fit = fit_config(o);
  opt.threads = o.threads;
  const auto dir = out_dir(o);
  const bool all = o.study == "all";
  // Flags override the default grids; "0" and "3.7" are the flag defaults.
  const bool custom_alpha = o.alpha != "0", custom_beta = o.beta != "3.7";
  const std::vector<double> mse_alphas =
      custom_alpha ? doubles(o.alpha, "--alpha")
                   : std::vector<double>{0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.175, 0.2, 0.225, 0.25};
  const std::vector<double> mse_betas =
      custom_beta ? doubles(o.beta, "--beta") : std::vector<double>{2.25, 3.0, 3.7, 4.5};
  const std::vector<double> cv_alphas =
      custom_alpha ? mse_alphas : std::vector<double>{0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25};
  const std::vector<double> cv_betas = custom_beta ? mse_betas : std::vector<double>{2.25, 3.0, 3.7, 4.0};

  json summary;
  summary["resolved_config"] = echo(o, "reproduce");
  if (all || o.study == "I") summary["study_I"] = study_one(o, dir, mse_alphas, mse_betas, opt);
  if (all || o.study == "II") summary["study_II"] = study_two(o, dir, cv_alphas, cv_betas, opt);
  if (all || o.study == "III") summary["study_III"] = study_three(o, dir, opt);
  if (all || o.study == "IV") summary["study_IV"] = study_four(o, dir, opt);
  if (all || o.study == "C") summary["appendix_C"] = study_small(o, dir, mse_alphas, mse_betas, opt);
  write_json_file((dir / "summary.json").string(), summary);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

// Config-file values fill options that were not given on the command line.
void apply_config(CLI::App* sub, const std::string& path) {
  for (const auto& [key, value] : read_config_file(path)) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (!opt) opt = sub->get_option_no_throw(key);
    if (!opt) throw UsageError("config key '" + key + "' is not an option of '" + sub->get_name() + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::solver_nonconvergence:
      return kExitNoConvergence;
    case Errc::sampler_budget_exhausted:
      return kExitSamplerBudget;
    case Errc::parse_error:
    case Errc::invalid_argument:
    case Errc::invalid_dimension:
    case Errc::out_of_domain:
    case Errc::non_finite_input:
    case Errc::empty_sample:
      return kExitUsage;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"B-spline copula estimation: penalized EM fits, tuning, sampling and simulation studies"};
  app.require_subcommand(1);

  auto add_fit_flags = [&](CLI::App* c) {
    c->add_option("--degree", o.degree, "spline degree, one value or one per axis")->capture_default_str();
    c->add_option("--alpha", o.alpha, "SCAD alpha (comma list for select)")->capture_default_str();
    c->add_option("--beta", o.beta, "SCAD beta (comma list for select)")->capture_default_str();
    c->add_option("--tol", o.tol, "EM stopping tolerance on max |dR|")->capture_default_str();
    c->add_option("--max-iters", o.max_iters, "EM iteration cap")->capture_default_str();
    c->add_option("--kkt-tol", o.kkt_tol, "also require this stationarity residual before stopping (0: off)")
        ->capture_default_str();
    c->add_option("--threads", o.threads, "worker threads (0: all cores)")->capture_default_str();
    c->add_option("--seed", o.seed, "random seed")->capture_default_str();
    c->add_option("--out", o.out, "output directory")->capture_default_str();
    c->add_option("--config", o.config, "flat key = value file; flags win");
  };
  auto add_data_flags = [&](CLI::App* c) {
    c->add_option("input", o.input, "CSV file with a header row")->required();
    c->add_option("--cols", o.cols, "columns to use, by name or 0-based index (comma list)");
    c->add_option("--pseudo", o.pseudo, "rank (ECDF) or identity (data already uniform)")
        ->check(CLI::IsMember({"rank", "identity"}))
        ->capture_default_str();
    c->add_option("--size", o.sizes, "basis counts per axis, e.g. 4,5 (repeatable)");
  };

  auto* fit = app.add_subcommand("fit", "fit a copula to CSV data");
  add_data_flags(fit);
  add_fit_flags(fit);

  auto* select = app.add_subcommand("select", "cross-validation and pseudo-AIC sweeps");
  add_data_flags(select);
  add_fit_flags(select);
  select->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
  select->add_option("--criterion", o.criterion, "cv, aic or both")->capture_default_str();

  auto* sample = app.add_subcommand("sample", "draw from a fitted model by rejection sampling");
  sample->add_option("model", o.model, "model JSON")->required();
  sample->add_option("-n,--count", o.count, "number of draws")->capture_default_str();
  sample->add_option("--seed", o.seed, "random seed")->capture_default_str();
  sample->add_option("--grid", o.grid, "envelope search points per axis")->capture_default_str();
  sample->add_option("--threads", o.threads, "worker threads for the envelope search")->capture_default_str();
  sample->add_option("--out", o.out, "output directory")->capture_default_str();
  sample->add_option("--config", o.config, "flat key = value file; flags win");

  auto* grid = app.add_subcommand("density-grid", "copula (and optional joint) density on a regular grid");
  grid->add_option("model", o.model, "model JSON")->required();
  grid->add_option("--grid", o.grid, "points per axis")->capture_default_str();
  grid->add_option("--data", o.data, "CSV whose margins define the joint-density grid");
  grid->add_option("--cols", o.cols, "columns of --data");
  grid->add_option("--out", o.out, "output directory")->capture_default_str();
  grid->add_option("--config", o.config, "flat key = value file; flags win");

  auto* reproduce = app.add_subcommand("reproduce", "run a simulation study at desk scale");
  reproduce->add_option("study", o.study, "I, II, III, IV, C or all")->capture_default_str();
  add_fit_flags(reproduce);
  reproduce->add_option("--folds", o.folds, "cross-validation folds")->capture_default_str();
  reproduce->add_option("--reps", o.reps, "datasets per fixture (default 20, 10 for C)");
  reproduce->add_option("--n", o.n, "observations per dataset (default 1000, 2000 for IV)");
  reproduce->add_option("--size", o.sizes, "size grid for study III (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (!o.config.empty()) apply_config(sub, o.config);
    if (sub == fit) return cmd_fit(o);
    if (sub == select) return cmd_select(o);
    if (sub == sample) return cmd_sample(o);
    if (sub == grid) return cmd_density_grid(o);
    return cmd_reproduce(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
