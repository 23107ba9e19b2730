#include "bspcop/studies.hpp"

#include <cmath>
#include <limits>

#include "bspcop/error.hpp"
#include "bspcop/margins.hpp"
#include "bspcop/parallel.hpp"
#include "bspcop/sample.hpp"
#include "bspcop/select.hpp"

namespace bspcop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> weights_of(const BasisSystem& b) { return {b.weights().begin(), b.weights().end()}; }

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  double s = 0.0, n = 0.0;
  for (double x : v)
    if (!std::isnan(x)) s += x, n += 1.0;
  mean = n > 0 ? s / n : kNaN;
  double ss = 0.0;
  for (double x : v)
    if (!std::isnan(x)) ss += (x - mean) * (x - mean);
  sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : kNaN;
}

}  // namespace

CopulaModel fixture_model(int id) {
  const auto b4 = BasisSystem::uniform(3, 4);
  const auto b5 = BasisSystem::uniform(3, 5);
  std::vector<double> r;
  switch (id) {
    case 1:
      r = {0.125, 0, 0, 0, 0.125,  //
           0, 0.25, 0, 0, 0,       //
           0, 0, 0, 0.25, 0,       //
           0, 0, 0.25, 0, 0};
      break;
    case 2:
      r = {0.05, 0.05, 0.05, 0.05, 0.05,       //
           0.025, 0.15, 0.025, 0.025, 0.025,   //
           0.025, 0.025, 0.025, 0.15, 0.025,   //
           0.025, 0.025, 0.15, 0.025, 0.025};
      break;
    case 3:
      r = {0.12, 0.005, 0, 0, 0,    //
           0.005, 0.245, 0, 0, 0,   //
           0, 0, 0.24, 0.01, 0,     //
           0, 0, 0.01, 0.24, 0,     //
           0, 0, 0, 0, 0.125};
      break;
    default:
      throw Error(Errc::invalid_argument, "fixture id must be 1, 2 or 3");
  }
  const BasisSystem& row = id == 3 ? b5 : b4;
  ParamTensor params({row.count(), 5}, std::move(r), {weights_of(row), weights_of(b5)});
  return CopulaModel({row, b5}, std::move(params));
}

std::vector<Matrix> fixture_datasets(int id, std::size_t N, std::size_t J, std::uint64_t seed) {
  return generate_study_data(fixture_model(id), N, J, seed + static_cast<std::uint64_t>(id) * 0x9e3779b97f4a7c15ULL);
}

MseSurface mse_surface(int fixture, const std::vector<Matrix>& datasets, const std::vector<double>& alphas,
                       const std::vector<double>& betas, const StudyOptions& opt) {
  const CopulaModel truth = fixture_model(fixture);
  const auto& bases = truth.bases();
  const std::size_t cells = alphas.size() * betas.size();
  const std::size_t J = datasets.size();
  if (J == 0) throw Error(Errc::empty_sample, "mse_surface needs datasets");

  std::vector<double> sq(cells * J, kNaN);
  std::vector<char> conv(cells * J, 0);
  std::vector<PseudoSample> samples;
  for (const auto& d : datasets) samples.push_back(identity_observations(d));

  parallel_for(cells * J, opt.threads, [&](std::size_t task) {
    const std::size_t cell = task / J, j = task % J;
    const ScadParams p{alphas[cell / betas.size()], betas[cell % betas.size()]};
    try {
      FitReport fr = fit_nd(samples[j], bases, p, opt.fit);
      std::vector<ParamTensor> one{fr.params};
      sq[task] = mse(one, truth.params());
      conv[task] = fr.converged ? 1 : 0;
    } catch (const Error&) {
    }
  });

  MseSurface out;
  out.fixture = fixture;
  out.N = datasets.front().rows;
  out.alphas = alphas;
  out.betas = betas;
  out.mse.assign(cells, 0.0);
  out.unconverged.assign(cells, 0);
  out.failed.assign(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    double total = 0.0;
    int used = 0;
    for (std::size_t j = 0; j < J; ++j) {
      const double v = sq[c * J + j];
      if (std::isnan(v)) {
        ++out.failed[c];
        continue;
      }
      total += v;
      ++used;
      if (!conv[c * J + j]) ++out.unconverged[c];
    }
    out.mse[c] = used ? total / used : kNaN;
  }
  return out;
}

CvSurface cv_surface(int fixture, const std::vector<Matrix>& datasets, const std::vector<double>& alphas,
                     const std::vector<double>& betas, int folds, std::uint64_t seed, const StudyOptions& opt) {
  const CopulaModel truth = fixture_model(fixture);
  SelectionGrid grid;
  grid.alphas = alphas;
  grid.betas = betas;
  grid.sizes = {{truth.bases()[0].count(), truth.bases()[1].count()}};
  grid.folds = folds;
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::identity;
  setup.fit = opt.fit;
  setup.threads = 1;

  const std::size_t cells = alphas.size() * betas.size();
  std::vector<SelectionReport> reports(datasets.size());
  parallel_for(datasets.size(), opt.threads, [&](std::size_t j) {
    SelectionGrid g = grid;
    g.seed = seed + j;
    reports[j] = cross_validate(datasets[j], g, setup);
  });

  CvSurface out;
  out.fixture = fixture;
  out.alphas = alphas;
  out.betas = betas;
  out.mean_cv.assign(cells, 0.0);
  out.invalid.assign(cells, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<double> v;
    for (const auto& r : reports) {
      if (!r.cv[c].valid) ++out.invalid[c];
      v.push_back(r.cv[c].valid ? r.cv[c].score : kNaN);
    }
    double sd;
    mean_sd(v, out.mean_cv[c], sd);
  }
  return out;
}

SizeTables size_tables(int fixture, const std::vector<Matrix>& datasets, const std::vector<std::vector<int>>& sizes,
                       int folds, std::uint64_t seed, const StudyOptions& opt) {
  SelectionSetup setup;
  setup.degrees = {3, 3};
  setup.mode = PseudoMode::identity;
  setup.fit = opt.fit;
  setup.threads = 1;
  const double alpha = 0.0, beta = 3.7;

  const std::size_t J = datasets.size();
  std::vector<SelectionReport> cv(J), aic(J);
  parallel_for(2 * J, opt.threads, [&](std::size_t task) {
    const std::size_t j = task / 2;
    if (task % 2 == 0)
      cv[j] = select_size(datasets[j], sizes, alpha, beta, setup, SizeCriterion::cv, folds, seed + j);
    else
      aic[j] = select_size(datasets[j], sizes, alpha, beta, setup, SizeCriterion::aic);
  });

  SizeTables out;
  out.fixture = fixture;
  out.sizes = sizes;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    std::vector<double> c, a;
    for (std::size_t j = 0; j < J; ++j) {
      c.push_back(cv[j].cv[s].valid ? cv[j].cv[s].score : kNaN);
      a.push_back(aic[j].aic[s].valid ? aic[j].aic[s].score : kNaN);
    }
    double m, sd;
    mean_sd(c, m, sd);
    out.mean_cv.push_back(m);
    out.sd_cv.push_back(sd);
    mean_sd(a, m, sd);
    out.mean_aic.push_back(m);
    out.sd_aic.push_back(sd);
  }
  return out;
}

TrivariateStudy trivariate_study(std::size_t N, std::uint64_t seed, const StudyOptions& opt) {
  const CopulaModel truth = baker_model(20, 20, 2);
  const BakerSample data = baker_trivariate(N, 20, 20, 2, seed);
  const PseudoSample sample = pseudo_observations(data.normal);
  const auto margins = fit_margins(data.normal);

  TrivariateStudy out;
  out.N = N;
  out.fits = {{"bernstein_20x20x2", {19, 19, 1}, {20, 20, 2}},
              {"bspline_20x20x2", {3, 3, 1}, {20, 20, 2}},
              {"bspline_10x10x2", {3, 3, 1}, {10, 10, 2}}};
  const ScadParams p{out.alpha, out.beta};

  auto truth_h = [&](std::span<const double> x) {
    double u[3], f = 1.0;
    for (int j = 0; j < 3; ++j) {
      u[j] = normal_cdf(x[j]);
      f *= normal_pdf(x[j]);
    }
    return truth.density(std::span<const double>(u, 3)) * f;
  };

  parallel_for(out.fits.size(), opt.threads, [&](std::size_t i) {
    TrivariateFit& tf = out.fits[i];
    const auto bases = make_bases(tf.degrees, tf.counts);
    FitReport fr = fit_nd(sample, bases, p, opt.fit);
    const CopulaModel est(bases, fr.params);
    tf.iterations = fr.iterations;
    tf.converged = fr.converged;
    tf.max_constraint_residual = validate(fr.params, bases).max_residual();
    auto est_h = [&](std::span<const double> x) { return joint_density(est, margins, x); };
    tf.mse = mse_joint_density(est_h, truth_h, data.normal);
  });
  return out;
}

}  // namespace bspcop
