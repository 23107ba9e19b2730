#pragma once

#include <span>
#include <vector>

#include "bspcop/copula.hpp"
#include "bspcop/matrix.hpp"

namespace bspcop {

/// Rank-rescaled observations; every coordinate lies strictly inside (0, 1).
struct PseudoSample {
  Matrix points;

  std::size_t size() const noexcept { return points.rows; }
  std::size_t dimension() const noexcept { return points.cols; }
};

/// Per axis u_t = #{s : x_s <= x_t} / (N + 1). Ties share the largest rank of their block.
/// Throws Error(non_finite_input) for NaN/inf cells, Error(empty_sample) for N < 2.
PseudoSample pseudo_observations(const Matrix& data);

/// Wraps data that are already copula-scale (e.g. simulated uniforms) without ranking.
/// Throws Error(out_of_domain) when a value is outside [0, 1].
PseudoSample identity_observations(const Matrix& data);

/// One axis: the sorted sample, its rescaled ECDF and a Gaussian kernel density.
class MarginalModel {
 public:
  explicit MarginalModel(std::vector<double> sample);

  std::size_t size() const noexcept { return sorted_.size(); }
  std::span<const double> sorted() const noexcept { return sorted_; }
  /// Silverman rule 1.06 * min(sd, IQR/1.34) * N^(-1/5); zero for a constant sample.
  double bandwidth() const noexcept { return bandwidth_; }

  /// (1 / (N + 1)) * #{x_t <= x}; right-continuous, bounded by N / (N + 1).
  double ecdf(double x) const;
  /// Gaussian-kernel density. Throws Error(zero_variance) when the bandwidth is zero.
  double kde(double x) const;

 private:
  std::vector<double> sorted_;
  double bandwidth_ = 0.0;
};

std::vector<MarginalModel> fit_margins(const Matrix& data);

/// h(x) = c(F_1(x_1), ..., F_D(x_D)) * prod_j f_j(x_j).
double joint_density(const CopulaModel& model, std::span<const MarginalModel> margins, std::span<const double> point);

double normal_pdf(double x);
double normal_cdf(double x);
/// Standard normal quantile: rational approximation polished by one Newton step.
/// Throws Error(out_of_domain) unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace bspcop
