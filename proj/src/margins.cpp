#include "bspcop/margins.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bspcop/error.hpp"

namespace bspcop {

PseudoSample pseudo_observations(const Matrix& data) {
  if (data.rows < 2) throw Error(Errc::empty_sample, "pseudo-observations need at least 2 rows");
  for (double v : data.data)
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "data contain a non-finite value");
  const std::size_t N = data.rows;
  PseudoSample out{Matrix(N, data.cols)};
  std::vector<std::size_t> order(N);
  for (std::size_t c = 0; c < data.cols; ++c) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data(a, c) < data(b, c); });
    std::size_t i = 0;
    while (i < N) {
      std::size_t j = i;
      while (j + 1 < N && data(order[j + 1], c) == data(order[i], c)) ++j;
      // Every member of the tie block [i, j] counts j + 1 values <= itself.
      const double u = static_cast<double>(j + 1) / static_cast<double>(N + 1);
      for (std::size_t t = i; t <= j; ++t) out.points(order[t], c) = u;
      i = j + 1;
    }
  }
  return out;
}

PseudoSample identity_observations(const Matrix& data) {
  for (double v : data.data)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::out_of_domain, "identity pseudo-observations must lie in [0, 1]");
  return PseudoSample{data};
}

MarginalModel::MarginalModel(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.size() < 2) throw Error(Errc::empty_sample, "marginal model needs at least 2 observations");
  for (double v : sorted_)
    if (!std::isfinite(v)) throw Error(Errc::non_finite_input, "marginal sample contains a non-finite value");
  std::sort(sorted_.begin(), sorted_.end());

  const double n = static_cast<double>(sorted_.size());
  const double mean = std::accumulate(sorted_.begin(), sorted_.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted_) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  // Type-7 sample quantiles.
  auto quantile = [&](double p) {
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted_.size() - 1);
    return sorted_[lo] + (h - std::floor(h)) * (sorted_[hi] - sorted_[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  bandwidth_ = 1.06 * spread * std::pow(n, -0.2);
}

double MarginalModel::ecdf(double x) const {
  const auto count = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
  return static_cast<double>(count) / static_cast<double>(sorted_.size() + 1);
}

double MarginalModel::kde(double x) const {
  if (!(bandwidth_ > 0.0)) throw Error(Errc::zero_variance, "kernel density needs a non-degenerate sample");
  const double inv_h = 1.0 / bandwidth_;
  double sum = 0.0;
  for (double v : sorted_) {
    const double z = (x - v) * inv_h;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * inv_h / (static_cast<double>(sorted_.size()) * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<MarginalModel> fit_margins(const Matrix& data) {
  std::vector<MarginalModel> out;
  out.reserve(data.cols);
  for (std::size_t c = 0; c < data.cols; ++c) out.emplace_back(data.column(c));
  return out;
}

double joint_density(const CopulaModel& model, std::span<const MarginalModel> margins, std::span<const double> point) {
  const std::size_t D = static_cast<std::size_t>(model.dimension());
  if (margins.size() != D || point.size() != D)
    throw Error(Errc::invalid_dimension, "joint density needs one margin and one coordinate per axis");
  std::vector<double> u(D);
  double prod = 1.0;
  for (std::size_t j = 0; j < D; ++j) {
    u[j] = margins[j].ecdf(point[j]);
    prod *= margins[j].kde(point[j]);
  }
  return model.density(u) * prod;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::out_of_domain, "normal quantile needs 0 < p < 1");
  // Acklam's rational approximation (relative error ~1e-9).
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Newton step against the erfc-based CDF.
  x -= (normal_cdf(x) - p) / normal_pdf(x);
  return x;
}

}  // namespace bspcop
