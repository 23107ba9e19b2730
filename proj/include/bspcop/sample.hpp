#pragma once

#include <cstdint>
#include <vector>

#include "bspcop/copula.hpp"
#include "bspcop/matrix.hpp"

namespace bspcop {

struct SamplerConfig {
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  int grid_resolution = 201;       // envelope search points per axis (knots are added)
  double safety_factor = 1.05;     // envelope = grid maximum * safety_factor
  std::uint64_t max_attempts_per_draw = 1'000'000;
  int threads = 1;                 // used only by the envelope grid search

  /// Throws Error(invalid_argument) when resolution < 51 or safety_factor < 1.
  void validate() const;
};

struct Envelope {
  double grid_max = 0.0;  // maximum density found on the search grid
  double bound = 0.0;     // grid_max * safety_factor
};

/// Grid search for max c over G^D points plus every knot line.
Envelope max_density(const CopulaModel& model, const SamplerConfig& cfg);

struct SampleRun {
  Matrix points;                 // N x D, inside (0, 1)^D
  std::uint64_t proposals = 0;   // proposals in the final (successful) pass
  std::uint64_t accepted = 0;
  double grid_max = 0.0;
  double envelope = 0.0;         // envelope in force at the end of the run
  int restarts = 0;              // envelope raises triggered by a proposal above it
  double max_proposal_density = 0.0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Rejection sampler with uniform proposals. If any proposal's density exceeds the
/// envelope by more than a relative 1e-12, the envelope is raised to 1.05 times that
/// density and sampling restarts from the beginning of the stream. Throws
/// Error(sampler_budget_exhausted) when one draw needs more than
/// cfg.max_attempts_per_draw proposals.
SampleRun rejection_sample(const CopulaModel& model, std::size_t count, const SamplerConfig& cfg);

/// J datasets of N points; dataset j uses Philox stream j of `seed`.
std::vector<Matrix> generate_study_data(const CopulaModel& model, std::size_t N, std::size_t J, std::uint64_t seed,
                                        const SamplerConfig& base = {});

/// Trivariate Baker-type Bernstein copula: slab 1 uniform with mass 1/2,
/// slab 2 diagonal in (k1, k2) with mass 1/2. Requires n1 == n2 and n3 == 2.
CopulaModel baker_model(int n1, int n2, int n3);

struct BakerSample {
  Matrix uniform;  // copula-scale draws
  Matrix normal;   // standard-normal margins via the normal quantile
};

BakerSample baker_trivariate(std::size_t N, int n1, int n2, int n3, std::uint64_t seed);

/// Kolmogorov-Smirnov statistic of a sample against Uniform(0, 1). Throws Error(empty_sample).
double ks_uniform(std::vector<double> values);

}  // namespace bspcop
