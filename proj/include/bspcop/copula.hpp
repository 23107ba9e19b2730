#pragma once

#include <span>
#include <vector>

#include "bspcop/basis.hpp"

namespace bspcop {

/// Dense non-negative parameter tensor r with per-axis marginal-sum targets.
/// Entries are stored row-major: the last axis varies fastest.
class ParamTensor {
 public:
  ParamTensor() = default;
  ParamTensor(std::vector<int> dims, std::vector<double> entries, std::vector<std::vector<double>> targets);

  /// Zero tensor with targets taken from the bases' weights.
  static ParamTensor zeros(std::span<const BasisSystem> bases);

  std::span<const int> dims() const noexcept { return dims_; }
  int rank() const noexcept { return static_cast<int>(dims_.size()); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const std::size_t> strides() const noexcept { return strides_; }

  std::span<const double> entries() const noexcept { return entries_; }
  std::span<double> entries() noexcept { return entries_; }
  double operator[](std::size_t i) const { return entries_[i]; }
  double& operator[](std::size_t i) { return entries_[i]; }

  double at(int k, int l) const { return entries_[k * strides_[0] + l * strides_[1]]; }
  double& at(int k, int l) { return entries_[k * strides_[0] + l * strides_[1]]; }

  const std::vector<std::vector<double>>& targets() const noexcept { return targets_; }

  /// Sum of entries over every axis except `axis`, one value per index on `axis`.
  std::vector<double> marginal(int axis) const;

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::vector<double> entries_;
  std::vector<std::vector<double>> targets_;
};

/// Raw constraint residuals of a parameter tensor.
struct ConstraintReport {
  std::vector<double> axis_residual;  // max |marginal - target| per axis
  double min_entry = 0.0;
  double total_deviation = 0.0;  // sum of entries minus 1
  bool feasible = true;          // all residuals within the tolerance, entries >= 0

  double max_residual() const;
};

inline constexpr double kConstraintTolerance = 1e-8;

/// Throws Error(invalid_dimension) when the tensor's shape does not match the bases.
ConstraintReport validate(const ParamTensor& params, std::span<const BasisSystem> bases,
                          double tolerance = kConstraintTolerance);

/// Tensor-product B-spline copula: D bases plus a parameter tensor.
class CopulaModel {
 public:
  CopulaModel(std::vector<BasisSystem> bases, ParamTensor params);

  int dimension() const noexcept { return static_cast<int>(bases_.size()); }
  const std::vector<BasisSystem>& bases() const noexcept { return bases_; }
  const ParamTensor& params() const noexcept { return params_; }

  /// c(u) = sum r_{k_1..k_D} prod_j phi_{k_j}(u_j), summed over the active window only.
  double density(std::span<const double> point) const;
  /// C(x) = sum r prod_j Phi_{k_j}(x_j).
  double cdf(std::span<const double> point) const;

  double density(double u, double v) const;
  double cdf(double u, double v) const;

  /// Density on the tensor grid axis_points[0] x ... x axis_points[D-1], row-major.
  /// Uses staged contraction, one axis at a time.
  std::vector<double> density_grid(const std::vector<std::vector<double>>& axis_points) const;

 private:
  void check_point(std::span<const double> point) const;

  std::vector<BasisSystem> bases_;
  ParamTensor params_;
};

/// R = diag(q) with the same basis on both axes: the maximal positive-dependence model.
CopulaModel diagonal_model(const BasisSystem& sys);
/// r = q q*^T (outer product across all axes); density identically 1.
CopulaModel independence_model(std::vector<BasisSystem> bases);

}  // namespace bspcop
