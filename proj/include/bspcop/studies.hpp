#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bspcop/copula.hpp"
#include "bspcop/em.hpp"
#include "bspcop/matrix.hpp"

namespace bspcop {

// Simulation studies on the three cubic fixtures. Fixture ids are 1, 2, 3:
//   1: 4x5, sparse (one or two non-zeros per row)
//   2: 4x5, dense with a dominant cell per row
//   3: 5x5, near-block-diagonal

CopulaModel fixture_model(int id);

/// J datasets of N copula-scale draws for a fixture; each fixture has its own seed
/// derived from `seed`, and dataset j uses stream j.
std::vector<Matrix> fixture_datasets(int id, std::size_t N, std::size_t J, std::uint64_t seed);

struct StudyOptions {
  FitConfig fit;
  int threads = 1;
};

/// Mean parameter MSE per (alpha, beta) cell, row-major over alphas x betas.
struct MseSurface {
  int fixture = 0;
  std::size_t N = 0;
  std::vector<double> alphas, betas;
  std::vector<double> mse;
  std::vector<int> unconverged;  // fits per cell that hit the iteration cap
  std::vector<int> failed;       // fits per cell that threw; excluded from the mean

  double at(std::size_t a, std::size_t b) const { return mse[a * betas.size() + b]; }
};

/// Fits the fixture's own size to every dataset with identity pseudo-observations.
MseSurface mse_surface(int fixture, const std::vector<Matrix>& datasets, const std::vector<double>& alphas,
                       const std::vector<double>& betas, const StudyOptions& opt);

/// Mean CV score over datasets per (alpha, beta) cell.
struct CvSurface {
  int fixture = 0;
  std::vector<double> alphas, betas;
  std::vector<double> mean_cv;
  std::vector<int> invalid;  // datasets whose cell had a failed fold

  double at(std::size_t a, std::size_t b) const { return mean_cv[a * betas.size() + b]; }
};

CvSurface cv_surface(int fixture, const std::vector<Matrix>& datasets, const std::vector<double>& alphas,
                     const std::vector<double>& betas, int folds, std::uint64_t seed, const StudyOptions& opt);

/// Mean CV and mean pseudo-AIC per model size at alpha = 0.
struct SizeTables {
  int fixture = 0;
  std::vector<std::vector<int>> sizes;
  std::vector<double> mean_cv;
  std::vector<double> mean_aic;
  std::vector<double> sd_cv;
  std::vector<double> sd_aic;
};

SizeTables size_tables(int fixture, const std::vector<Matrix>& datasets, const std::vector<std::vector<int>>& sizes,
                       int folds, std::uint64_t seed, const StudyOptions& opt);

/// Joint-density comparison on trivariate Baker data with normal margins.
struct TrivariateFit {
  std::string name;
  std::vector<int> degrees;
  std::vector<int> counts;
  double mse = 0.0;
  double max_constraint_residual = 0.0;  // of the final estimate, all three families
  int iterations = 0;
  bool converged = false;
};

struct TrivariateStudy {
  std::size_t N = 0;
  double alpha = 0.01;
  double beta = 2.25;
  std::vector<TrivariateFit> fits;
};

TrivariateStudy trivariate_study(std::size_t N, std::uint64_t seed, const StudyOptions& opt);

}  // namespace bspcop
