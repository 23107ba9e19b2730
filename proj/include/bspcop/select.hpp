#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bspcop/em.hpp"
#include "bspcop/matrix.hpp"

namespace bspcop {

/// How raw data are mapped to the copula scale. `identity` is for data that are
/// already uniform (simulation studies); `rank` uses the rescaled ECDF.
enum class PseudoMode { rank, identity };

PseudoMode parse_pseudo_mode(const std::string& s);
std::string to_string(PseudoMode m);

/// Tuning and size grids for a selection sweep. Each size lists one basis count per axis.
struct SelectionGrid {
  std::vector<double> alphas{0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25};
  std::vector<double> betas{2.25, 3.0, 3.7, 4.0};
  std::vector<std::vector<int>> sizes;
  int folds = 5;
  std::uint64_t seed = 1;

  /// Throws Error(invalid_argument) for empty grids, folds < 2 or folds > N.
  void validate(std::size_t N) const;
};

/// Settings shared by every fit in a sweep.
struct SelectionSetup {
  std::vector<int> degrees;  // one per axis
  PseudoMode mode = PseudoMode::rank;
  FitConfig fit;
  int threads = 1;
};

struct CvCell {
  std::vector<int> size;
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<double> fold_scores;  // mean held-out log density per fold
  std::vector<char> fold_converged;
  std::vector<std::string> fold_errors;  // empty string when the fold fit succeeded
  double score = 0.0;                    // sum over folds; NaN when any fold failed
  bool valid = false;
  bool converged = false;  // every fold converged
};

struct AicCell {
  std::vector<int> size;
  double alpha = 0.0;
  double beta = 0.0;
  double score = 0.0;  // NaN when the fit failed
  double mean_loglik = 0.0;
  bool valid = false;
  bool converged = false;
  std::string error;
};

struct SelectionReport {
  std::vector<CvCell> cv;
  std::vector<AicCell> aic;
  std::optional<std::size_t> best_cv;   // argmax over valid cells
  std::optional<std::size_t> best_aic;  // argmin over valid cells
  std::vector<std::vector<std::size_t>> folds;
};

/// Bases with uniform knots; degrees are per axis. Throws Error(invalid_dimension)
/// when the two lists differ in length.
std::vector<BasisSystem> make_bases(std::span<const int> degrees, std::span<const int> counts);

/// Seeded random partition of 0..N-1 into M folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> fold_partition(std::size_t N, int M, std::uint64_t seed);

/// Copula-scale sample of the full data set under the given mode.
PseudoSample to_pseudo(const Matrix& data, PseudoMode mode);

/// M-fold cross-validation over sizes x alphas x betas. Fold fits that throw mark
/// their cell invalid; the sweep always completes.
SelectionReport cross_validate(const Matrix& data, const SelectionGrid& grid, const SelectionSetup& setup);

enum class SizeCriterion { cv, aic };

/// Model-size sweep at fixed (alpha, beta): CV argmax or pseudo-AIC argmin.
SelectionReport select_size(const Matrix& data, const std::vector<std::vector<int>>& sizes, double alpha,
                            double beta, const SelectionSetup& setup, SizeCriterion method, int folds = 5,
                            std::uint64_t seed = 1);

/// Free parameters of a tensor with the given dims once every marginal sum is fixed.
/// Two axes give (m-1)(n-1).
long effective_parameters(std::span<const int> dims);

/// -2 sum_t log c(u_t) + 2 * effective_parameters. Throws Error(zero_density).
double pseudo_aic(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases);

/// (1/J) sum_j sum (r_hat - r)^2. Throws Error(invalid_dimension) on shape mismatch
/// and Error(empty_sample) when the list is empty.
double mse(std::span<const ParamTensor> estimates, const ParamTensor& truth);

using DensityFn = std::function<double(std::span<const double>)>;

/// (1/N) sum_t (estimate(x_t) - truth(x_t))^2 over the rows of data.
double mse_joint_density(const DensityFn& estimate, const DensityFn& truth, const Matrix& data);

}  // namespace bspcop
