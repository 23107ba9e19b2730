#pragma once

#include <span>
#include <vector>

namespace bspcop {

/// Largest supported polynomial degree. Bernstein systems of size m need degree m - 1,
/// so the cap has to cover the 20-function Bernstein axes used in the trivariate study.
inline constexpr int kMaxDegree = 30;

/// Clamped, equally spaced B-spline system on [0, 1].
///
/// Basis functions are indexed 0..count()-1. Function k is supported on
/// [knots[k], knots[k + degree + 1]]. Knot intervals are half-open on the right,
/// except that x = 1 belongs to the last non-empty interval so the system stays a
/// partition of unity at the right endpoint. With count == degree + 1 there are no
/// interior knots and the functions are Bernstein polynomials.
class BasisSystem {
 public:
  /// Throws Error(invalid_dimension) when degree is outside [0, kMaxDegree]
  /// or count < degree + 1.
  static BasisSystem uniform(int degree, int count);

  int degree() const noexcept { return degree_; }
  int count() const noexcept { return count_; }
  /// Number of knot intervals p, so count() == intervals() + degree().
  int intervals() const noexcept { return count_ - degree_; }
  int interior_knots() const noexcept { return intervals() - 1; }

  std::span<const double> knots() const noexcept { return knots_; }
  /// q_k, the integral of basis function k over [0, 1].
  std::span<const double> weights() const noexcept { return weights_; }

  /// Index of the first non-zero basis function at x; degree()+1 functions
  /// starting there are the only ones that can be non-zero.
  int first_active(double x) const;

  /// Values of the degree()+1 active B-splines N at x. Returns first_active(x).
  int eval_active(double x, std::span<double> out) const;
  /// Same as eval_active but normalized to the densities phi = N / q.
  int eval_active_phi(double x, std::span<double> out) const;

  double bspline(int k, double x) const;
  double phi(int k, double x) const;
  /// Cumulative distribution of phi_k, integrated per knot span with Gauss-Legendre.
  double Phi(int k, double x) const;
  /// Phi_k(x) for every k at once (size count()).
  void Phi_all(double x, std::span<double> out) const;

  bool operator==(const BasisSystem& other) const {
    return degree_ == other.degree_ && count_ == other.count_;
  }

 private:
  BasisSystem(int degree, int count);

  void check_index(int k) const;
  /// Integral of N_k over [knots[span], x] for x inside that span.
  double partial_span_integral(int k, int span, double x) const;

  int degree_ = 0;
  int count_ = 0;
  std::vector<double> knots_;
  std::vector<double> weights_;
  /// cum_[k * (degree+2) + j]: integral of N_k from knots[k] to knots[k + j].
  std::vector<double> cum_;
};

/// Integrals q_k computed independently with a 64-point Gauss-Legendre rule per
/// knot span. Kept as a cross-check of the closed form.
std::vector<double> basis_integrals_by_quadrature(const BasisSystem& sys);

}  // namespace bspcop
