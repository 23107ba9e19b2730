#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bspcop/basis.hpp"
#include "bspcop/copula.hpp"
#include "bspcop/margins.hpp"

namespace bspcop {

/// SCAD tuning pair. alpha = 0 switches the penalty off.
struct ScadParams {
  double alpha = 0.0;
  double beta = 3.7;

  /// Throws Error(invalid_argument) unless alpha >= 0 and beta > 2.
  void validate() const;
};

double scad(double r, const ScadParams& p);
double scad_deriv(double r, const ScadParams& p);

struct FitConfig {
  double outer_tol = 1e-8;      // stop when max |R(s+1) - R(s)| falls below this
  int max_outer_iters = 5000;
  double inner_tol = 1e-13;     // multiplier solve stops once every marginal residual is below this
  int max_inner_iters = 500;
  double root_tol = 1e-12;      // bracket width for the 1-D multiplier roots
  double mu0 = 0.5;             // initial multiplier value; also fixes the gauge
  double kkt_threshold = 1e-6;  // stationarity is checked on entries above this
  double kkt_tol = 0.0;         // when positive, convergence also requires kkt_residual <= kkt_tol
  bool warm_start = true;       // start each M-step from the previous multipliers
};

/// Per-observation active windows of the tensor basis: for each point, the flat
/// indices of cells whose product density prod_j phi_{k_j}(u_j) can be non-zero,
/// with those products. Built once per sample and reused by every EM step.
class ActiveWindows {
 public:
  ActiveWindows(std::span<const BasisSystem> bases, const PseudoSample& sample);

  std::size_t points() const noexcept { return points_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const std::uint32_t> cells(std::size_t t) const { return {cells_.data() + t * width_, width_}; }
  std::span<const double> weights(std::size_t t) const { return {weights_.data() + t * width_, width_}; }

 private:
  std::size_t points_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint32_t> cells_;
  std::vector<double> weights_;
};

struct EStepResult {
  std::vector<double> tau;    // mean responsibilities per cell; sums to 1
  std::vector<double> score;  // (1/N) sum_t prod phi / c(u_t); tau = r * score
  double mean_loglik = 0.0;   // (1/N) sum_t log c(u_t; R)
};

/// Throws Error(zero_density) when some observation has zero mixture density.
EStepResult e_step(const ParamTensor& params, const ActiveWindows& windows);
EStepResult e_step(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases);

/// Lagrange multipliers, one vector per axis. For two axes values[0] holds the
/// row multipliers mu and values[1] the column multipliers lambda.
struct Multipliers {
  std::vector<std::vector<double>> values;
  int sweeps = 0;
  double last_change = 0.0;

  std::span<const double> mu() const { return values.at(0); }
  std::span<const double> lambda() const { return values.at(1); }
};

/// Shape information shared by the multiplier solver and the M-step.
struct TensorShape {
  std::vector<int> dims;
  std::vector<std::vector<double>> targets;

  static TensorShape of(const ParamTensor& t) {
    return {std::vector<int>(t.dims().begin(), t.dims().end()), t.targets()};
  }
};

/// Solves the constraint equations of the M-step for fixed tau and frozen penalty slopes.
///
/// Each sweep solves the last axis's equations first, then every other axis in order,
/// re-centering each of those so that sum_k q_k mult_k equals its value at mult = mu0.
/// Every equation is a 1-D bracketed bisection; its left-hand side is strictly
/// decreasing on the admissible ray, so the root is unique. Indices whose tau slice is
/// all zero are not solved; their cells are pinned to the product of targets instead.
/// Throws Error(solver_nonconvergence) after cfg.max_inner_iters sweeps.
Multipliers solve_multipliers(std::span<const double> tau, const TensorShape& shape, std::span<const double> pdot,
                              const FitConfig& cfg, const Multipliers* warm = nullptr);

/// r = tau / (sum of multipliers + pdot). Throws Error(negative_denominator) when a
/// cell with positive tau has a non-positive denominator.
ParamTensor m_step(std::span<const double> tau, const Multipliers& mult, std::span<const double> pdot,
                   const TensorShape& shape);

/// Eq.-style initializer: r = (prod_j q) * mean_t prod_j phi(u_t). Throws Error(empty_sample).
ParamTensor init_param(std::span<const BasisSystem> bases, const PseudoSample& sample);

double mean_loglik(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases);
/// mean_loglik minus the summed SCAD penalty (the Lagrange terms vanish on feasible R).
double penalized_loglik(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases,
                        const ScadParams& p);
double total_penalty(const ParamTensor& params, const ScadParams& p);

struct FitReport {
  ParamTensor params;
  Multipliers multipliers;
  std::vector<double> lp_trajectory;      // L_p at R(1), R(2), ..., R(final)
  std::vector<double> lpstar_trajectory;  // matching mean log-likelihoods
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  double kkt_residual = 0.0;
  double max_constraint_residual = 0.0;  // worst marginal residual after any M-step
  double max_tau_mass_error = 0.0;       // worst |sum tau - 1| over all E-steps
  int max_inner_sweeps = 0;
  ScadParams scad;
  FitConfig config;
};

/// Penalized EM for a bivariate copula. Throws Error(invalid_dimension) unless two bases.
FitReport fit(const PseudoSample& sample, std::span<const BasisSystem> bases, const ScadParams& p,
              const FitConfig& cfg = {});
/// Same algorithm for D >= 2 axes.
FitReport fit_nd(const PseudoSample& sample, std::span<const BasisSystem> bases, const ScadParams& p,
                 const FitConfig& cfg = {});

/// max |score - sum of multipliers - pdot| over cells with r > threshold.
double kkt_residual(const ParamTensor& params, std::span<const double> score, const Multipliers& mult,
                    const ScadParams& p, double threshold);

}  // namespace bspcop
