#include "bspcop/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bspcop/error.hpp"
#include "bspcop/margins.hpp"
#include "bspcop/parallel.hpp"
#include "bspcop/rng.hpp"

namespace bspcop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kFoldStream = 0x5e1ec7f01dULL;

struct FoldData {
  PseudoSample train;
  PseudoSample test;
};

// Held-out points mapped through the training ECDFs.
PseudoSample transform_with(const std::vector<MarginalModel>& margins, const Matrix& test) {
  PseudoSample out{Matrix(test.rows, test.cols)};
  for (std::size_t t = 0; t < test.rows; ++t)
    for (std::size_t j = 0; j < test.cols; ++j) out.points(t, j) = margins[j].ecdf(test(t, j));
  return out;
}

std::vector<FoldData> split_folds(const Matrix& data, const std::vector<std::vector<std::size_t>>& folds,
                                  PseudoMode mode) {
  std::vector<FoldData> out;
  out.reserve(folds.size());
  for (std::size_t i = 0; i < folds.size(); ++i) {
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 0; f < folds.size(); ++f)
      if (f != i) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    std::sort(train_idx.begin(), train_idx.end());
    std::vector<std::size_t> test_idx = folds[i];
    std::sort(test_idx.begin(), test_idx.end());
    Matrix train = data.select_rows(train_idx);
    Matrix test = data.select_rows(test_idx);
    if (mode == PseudoMode::identity) {
      out.push_back({identity_observations(train), identity_observations(test)});
    } else {
      auto margins = fit_margins(train);
      out.push_back({pseudo_observations(train), transform_with(margins, test)});
    }
  }
  return out;
}

// Mean log density of held-out points. A zero density gives -inf, the worst score,
// rather than an error: the fit itself succeeded.
double held_out_score(const ParamTensor& params, std::span<const BasisSystem> bases, const PseudoSample& test) {
  CopulaModel model(std::vector<BasisSystem>(bases.begin(), bases.end()), params);
  double total = 0.0;
  for (std::size_t t = 0; t < test.size(); ++t) total += std::log(model.density(test.points.row(t)));
  return total / static_cast<double>(test.size());
}

template <class Cell>
std::optional<std::size_t> best_cell(const std::vector<Cell>& cells, bool maximize) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].valid || std::isnan(cells[i].score)) continue;
    if (!best || (maximize ? cells[i].score > cells[*best].score : cells[i].score < cells[*best].score)) best = i;
  }
  return best;
}

}  // namespace

PseudoMode parse_pseudo_mode(const std::string& s) {
  if (s == "rank") return PseudoMode::rank;
  if (s == "identity") return PseudoMode::identity;
  throw Error(Errc::invalid_argument, "pseudo mode must be 'rank' or 'identity', got '" + s + "'");
}

std::string to_string(PseudoMode m) { return m == PseudoMode::rank ? "rank" : "identity"; }

void SelectionGrid::validate(std::size_t N) const {
  if (alphas.empty() || betas.empty() || sizes.empty())
    throw Error(Errc::invalid_argument, "selection grids must be non-empty");
  if (folds < 2) throw Error(Errc::invalid_argument, "cross-validation needs at least two folds");
  if (static_cast<std::size_t>(folds) > N) throw Error(Errc::invalid_argument, "more folds than observations");
  for (double a : alphas)
    for (double b : betas) ScadParams{a, b}.validate();
}

std::vector<BasisSystem> make_bases(std::span<const int> degrees, std::span<const int> counts) {
  if (degrees.size() != counts.size())
    throw Error(Errc::invalid_dimension, "need one degree per axis (" + std::to_string(degrees.size()) +
                                             " degrees, " + std::to_string(counts.size()) + " counts)");
  std::vector<BasisSystem> out;
  out.reserve(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) out.push_back(BasisSystem::uniform(degrees[j], counts[j]));
  return out;
}

std::vector<std::vector<std::size_t>> fold_partition(std::size_t N, int M, std::uint64_t seed) {
  if (M < 1 || static_cast<std::size_t>(M) > N) throw Error(Errc::invalid_argument, "fold count must be in [1, N]");
  std::vector<std::size_t> perm(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Fisher-Yates with an explicit draw so the permutation does not depend on the
  // standard library's shuffle.
  Philox rng(seed, kFoldStream);
  for (std::size_t i = N; i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(M));
  for (std::size_t i = 0; i < N; ++i) folds[i % folds.size()].push_back(perm[i]);
  return folds;
}

PseudoSample to_pseudo(const Matrix& data, PseudoMode mode) {
  return mode == PseudoMode::identity ? identity_observations(data) : pseudo_observations(data);
}

SelectionReport cross_validate(const Matrix& data, const SelectionGrid& grid, const SelectionSetup& setup) {
  grid.validate(data.rows);
  SelectionReport rep;
  rep.folds = fold_partition(data.rows, grid.folds, grid.seed);
  const auto folds = split_folds(data, rep.folds, setup.mode);
  const std::size_t M = folds.size();

  for (const auto& size : grid.sizes)
    for (double a : grid.alphas)
      for (double b : grid.betas) {
        CvCell cell;
        cell.size = size;
        cell.alpha = a;
        cell.beta = b;
        cell.fold_scores.assign(M, kNaN);
        cell.fold_converged.assign(M, 0);
        cell.fold_errors.assign(M, "");
        rep.cv.push_back(std::move(cell));
      }

  parallel_for(rep.cv.size() * M, setup.threads, [&](std::size_t task) {
    CvCell& cell = rep.cv[task / M];
    const std::size_t i = task % M;
    try {
      auto bases = make_bases(setup.degrees, cell.size);
      FitReport fr = fit_nd(folds[i].train, bases, ScadParams{cell.alpha, cell.beta}, setup.fit);
      cell.fold_scores[i] = held_out_score(fr.params, bases, folds[i].test);
      cell.fold_converged[i] = fr.converged ? 1 : 0;
    } catch (const std::exception& e) {
      cell.fold_errors[i] = e.what();
    }
  });

  for (auto& cell : rep.cv) {
    cell.valid = std::all_of(cell.fold_errors.begin(), cell.fold_errors.end(), [](auto& s) { return s.empty(); });
    cell.converged = std::all_of(cell.fold_converged.begin(), cell.fold_converged.end(), [](char c) { return c; });
    cell.score = cell.valid ? std::accumulate(cell.fold_scores.begin(), cell.fold_scores.end(), 0.0) : kNaN;
  }
  rep.best_cv = best_cell(rep.cv, true);
  return rep;
}

SelectionReport select_size(const Matrix& data, const std::vector<std::vector<int>>& sizes, double alpha,
                            double beta, const SelectionSetup& setup, SizeCriterion method, int folds,
                            std::uint64_t seed) {
  if (method == SizeCriterion::cv) {
    SelectionGrid grid;
    grid.alphas = {alpha};
    grid.betas = {beta};
    grid.sizes = sizes;
    grid.folds = folds;
    grid.seed = seed;
    return cross_validate(data, grid, setup);
  }
  if (sizes.empty()) throw Error(Errc::invalid_argument, "size grid must be non-empty");
  ScadParams{alpha, beta}.validate();
  const PseudoSample sample = to_pseudo(data, setup.mode);
  SelectionReport rep;
  rep.aic.resize(sizes.size());
  parallel_for(sizes.size(), setup.threads, [&](std::size_t i) {
    AicCell& cell = rep.aic[i];
    cell.size = sizes[i];
    cell.alpha = alpha;
    cell.beta = beta;
    cell.score = kNaN;
    try {
      auto bases = make_bases(setup.degrees, sizes[i]);
      FitReport fr = fit_nd(sample, bases, ScadParams{alpha, beta}, setup.fit);
      cell.score = pseudo_aic(fr.params, sample, bases);
      cell.mean_loglik = fr.lpstar_trajectory.empty() ? kNaN : fr.lpstar_trajectory.back();
      cell.converged = fr.converged;
      cell.valid = true;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  rep.best_aic = best_cell(rep.aic, false);
  return rep;
}

long effective_parameters(std::span<const int> dims) {
  long cells = 1;
  long fixed = 1;  // the total mass
  for (int d : dims) {
    cells *= d;
    fixed += d - 1;
  }
  return cells - fixed;
}

double pseudo_aic(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases) {
  const double n = static_cast<double>(sample.size());
  return -2.0 * n * mean_loglik(params, sample, bases) + 2.0 * static_cast<double>(effective_parameters(params.dims()));
}

double mse(std::span<const ParamTensor> estimates, const ParamTensor& truth) {
  if (estimates.empty()) throw Error(Errc::empty_sample, "mse needs at least one estimate");
  double total = 0.0;
  for (const auto& est : estimates) {
    if (!std::equal(est.dims().begin(), est.dims().end(), truth.dims().begin(), truth.dims().end()))
      throw Error(Errc::invalid_dimension, "estimate shape does not match the truth");
    for (std::size_t c = 0; c < truth.size(); ++c) {
      double e = est[c] - truth[c];
      total += e * e;
    }
  }
  return total / static_cast<double>(estimates.size());
}

double mse_joint_density(const DensityFn& estimate, const DensityFn& truth, const Matrix& data) {
  if (data.rows == 0) throw Error(Errc::empty_sample, "mse_joint_density needs data");
  double total = 0.0;
  for (std::size_t t = 0; t < data.rows; ++t) {
    double e = estimate(data.row(t)) - truth(data.row(t));
    total += e * e;
  }
  return total / static_cast<double>(data.rows);
}

}  // namespace bspcop
