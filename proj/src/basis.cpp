#include "bspcop/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "bspcop/error.hpp"
#include "bspcop/quadrature.hpp"

namespace bspcop {

BasisSystem BasisSystem::uniform(int degree, int count) { return BasisSystem(degree, count); }

BasisSystem::BasisSystem(int degree, int count) : degree_(degree), count_(count) {
  if (degree < 0 || degree > kMaxDegree)
    throw Error(Errc::invalid_dimension, "degree " + std::to_string(degree) + " outside [0, " +
                                             std::to_string(kMaxDegree) + "]");
  if (count < degree + 1)
    throw Error(Errc::invalid_dimension, "count " + std::to_string(count) + " < degree + 1");

  const int p = intervals();
  knots_.assign(count + degree + 1, 0.0);
  for (int j = 0; j <= p; ++j) knots_[degree + j] = static_cast<double>(j) / p;
  for (int i = degree + p; i < static_cast<int>(knots_.size()); ++i) knots_[i] = 1.0;

  weights_.resize(count);
  for (int k = 0; k < count; ++k) weights_[k] = (knots_[k + degree + 1] - knots_[k]) / (degree + 1);

  // Running integrals at the knots of each support, used by Phi.
  const int stride = degree + 2;
  cum_.assign(static_cast<std::size_t>(count) * stride, 0.0);
  for (int k = 0; k < count; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= degree; ++j) {
      const int span = k + j;
      const double a = knots_[span];
      const double b = knots_[span + 1];
      if (b > a) acc += partial_span_integral(k, span, b);
      cum_[k * stride + j + 1] = acc;
    }
  }
}

void BasisSystem::check_index(int k) const {
  if (k < 0 || k >= count_)
    throw Error(Errc::index_out_of_range,
                "basis index " + std::to_string(k) + " not in [0, " + std::to_string(count_) + ")");
}

int BasisSystem::first_active(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "basis argument must lie in [0, 1]");
  const int p = intervals();
  int j = static_cast<int>(std::floor(x * p));
  j = std::clamp(j, 0, p - 1);
  // Guard against rounding in x * p near a knot.
  while (j > 0 && x < knots_[degree_ + j]) --j;
  while (j < p - 1 && x >= knots_[degree_ + j + 1]) ++j;
  return j;
}

int BasisSystem::eval_active(double x, std::span<double> out) const {
  const int first = first_active(x);
  const int span = first + degree_;  // knots_[span] <= x < knots_[span + 1]
  // Cox-de Boor triangle (de Boor's BasisFuns).
  std::array<double, kMaxDegree + 1> left{};
  std::array<double, kMaxDegree + 1> right{};
  out[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
  return first;
}

int BasisSystem::eval_active_phi(double x, std::span<double> out) const {
  const int first = eval_active(x, out);
  for (int r = 0; r <= degree_; ++r) out[r] /= weights_[first + r];
  return first;
}

double BasisSystem::bspline(int k, double x) const {
  check_index(k);
  std::array<double, kMaxDegree + 1> vals{};
  const int first = eval_active(x, vals);
  if (k < first || k > first + degree_) return 0.0;
  return vals[k - first];
}

double BasisSystem::phi(int k, double x) const { return bspline(k, x) / weights_[k]; }

double BasisSystem::partial_span_integral(int k, int span, double x) const {
  const double a = knots_[span];
  if (x <= a) return 0.0;
  return integrate(
      [&](double t) {
        std::array<double, kMaxDegree + 1> vals{};
        const int first = eval_active(t, vals);
        return (k >= first && k <= first + degree_) ? vals[k - first] : 0.0;
      },
      a, x, degree_ + 2);
}

double BasisSystem::Phi(int k, double x) const {
  check_index(k);
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "Phi argument must lie in [0, 1]");
  const int stride = degree_ + 2;
  const double lo = knots_[k];
  const double hi = knots_[k + degree_ + 1];
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  // Span containing x within the support of k.
  int j = 0;
  while (j < degree_ && x >= knots_[k + j + 1]) ++j;
  const double partial = partial_span_integral(k, k + j, x);
  return std::min(1.0, (cum_[k * stride + j] + partial) / weights_[k]);
}

void BasisSystem::Phi_all(double x, std::span<double> out) const {
  const int first = first_active(x);
  for (int k = 0; k < count_; ++k) {
    if (k < first)
      out[k] = 1.0;
    else if (k > first + degree_)
      out[k] = 0.0;
    else
      out[k] = Phi(k, x);
  }
}

std::vector<double> basis_integrals_by_quadrature(const BasisSystem& sys) {
  std::vector<double> q(sys.count(), 0.0);
  auto t = sys.knots();
  for (int k = 0; k < sys.count(); ++k) {
    for (int span = k; span <= k + sys.degree(); ++span) {
      if (t[span + 1] <= t[span]) continue;
      q[k] += integrate([&](double x) { return sys.bspline(k, x); }, t[span], t[span + 1], 64);
    }
  }
  return q;
}

}  // namespace bspcop
