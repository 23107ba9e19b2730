#include "bspcop/copula.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "bspcop/error.hpp"

namespace bspcop {

namespace {

std::vector<std::size_t> make_strides(std::span<const int> dims) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (int j = static_cast<int>(dims.size()) - 2; j >= 0; --j) strides[j] = strides[j + 1] * dims[j + 1];
  return strides;
}

}  // namespace

ParamTensor::ParamTensor(std::vector<int> dims, std::vector<double> entries,
                         std::vector<std::vector<double>> targets)
    : dims_(std::move(dims)), entries_(std::move(entries)), targets_(std::move(targets)) {
  if (dims_.empty()) throw Error(Errc::invalid_dimension, "parameter tensor needs at least one axis");
  std::size_t total = 1;
  for (int d : dims_) {
    if (d < 1) throw Error(Errc::invalid_dimension, "tensor extents must be positive");
    total *= static_cast<std::size_t>(d);
  }
  if (entries_.size() != total)
    throw Error(Errc::invalid_dimension, "entry count " + std::to_string(entries_.size()) +
                                             " does not match tensor shape (" + std::to_string(total) + ")");
  if (targets_.size() != dims_.size()) throw Error(Errc::invalid_dimension, "one target vector per axis required");
  for (std::size_t j = 0; j < dims_.size(); ++j)
    if (targets_[j].size() != static_cast<std::size_t>(dims_[j]))
      throw Error(Errc::invalid_dimension, "target length does not match axis extent");
  strides_ = make_strides(dims_);
}

ParamTensor ParamTensor::zeros(std::span<const BasisSystem> bases) {
  std::vector<int> dims;
  std::vector<std::vector<double>> targets;
  std::size_t total = 1;
  for (const auto& b : bases) {
    dims.push_back(b.count());
    targets.emplace_back(b.weights().begin(), b.weights().end());
    total *= b.count();
  }
  return ParamTensor(std::move(dims), std::vector<double>(total, 0.0), std::move(targets));
}

std::vector<double> ParamTensor::marginal(int axis) const {
  std::vector<double> out(dims_[axis], 0.0);
  const std::size_t stride = strides_[axis];
  const std::size_t extent = dims_[axis];
  for (std::size_t i = 0; i < entries_.size(); ++i) out[(i / stride) % extent] += entries_[i];
  return out;
}

double ConstraintReport::max_residual() const {
  double m = 0.0;
  for (double r : axis_residual) m = std::max(m, r);
  return m;
}

ConstraintReport validate(const ParamTensor& params, std::span<const BasisSystem> bases, double tolerance) {
  if (static_cast<std::size_t>(params.rank()) != bases.size())
    throw Error(Errc::invalid_dimension, "tensor rank does not match number of bases");
  for (std::size_t j = 0; j < bases.size(); ++j)
    if (params.dims()[j] != bases[j].count())
      throw Error(Errc::invalid_dimension, "tensor extent does not match basis count on axis " + std::to_string(j));

  ConstraintReport rep;
  for (int j = 0; j < params.rank(); ++j) {
    const auto marg = params.marginal(j);
    const auto q = bases[j].weights();
    double worst = 0.0;
    for (std::size_t k = 0; k < marg.size(); ++k) worst = std::max(worst, std::abs(marg[k] - q[k]));
    rep.axis_residual.push_back(worst);
  }
  const auto e = params.entries();
  rep.min_entry = e.empty() ? 0.0 : *std::min_element(e.begin(), e.end());
  rep.total_deviation = std::accumulate(e.begin(), e.end(), 0.0) - 1.0;
  rep.feasible = rep.min_entry >= 0.0 && std::abs(rep.total_deviation) <= tolerance && rep.max_residual() <= tolerance;
  return rep;
}

CopulaModel::CopulaModel(std::vector<BasisSystem> bases, ParamTensor params)
    : bases_(std::move(bases)), params_(std::move(params)) {
  if (bases_.empty()) throw Error(Errc::invalid_dimension, "copula needs at least one axis");
  if (static_cast<std::size_t>(params_.rank()) != bases_.size())
    throw Error(Errc::invalid_dimension, "tensor rank does not match number of bases");
  for (std::size_t j = 0; j < bases_.size(); ++j)
    if (params_.dims()[j] != bases_[j].count())
      throw Error(Errc::invalid_dimension, "tensor extent does not match basis count");
}

void CopulaModel::check_point(std::span<const double> point) const {
  if (point.size() != bases_.size()) throw Error(Errc::invalid_dimension, "point dimension does not match copula");
  for (double x : point)
    if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "copula argument outside [0, 1]");
}

double CopulaModel::density(std::span<const double> point) const {
  check_point(point);
  const int D = dimension();
  std::vector<std::array<double, kMaxDegree + 1>> vals(D);
  std::vector<int> first(D), width(D);
  for (int j = 0; j < D; ++j) {
    first[j] = bases_[j].eval_active_phi(point[j], vals[j]);
    width[j] = bases_[j].degree() + 1;
  }
  const auto strides = params_.strides();
  // Odometer over the active window.
  std::vector<int> idx(D, 0);
  double sum = 0.0;
  while (true) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int j = 0; j < D; ++j) {
      flat += static_cast<std::size_t>(first[j] + idx[j]) * strides[j];
      w *= vals[j][idx[j]];
    }
    sum += params_[flat] * w;
    int j = D - 1;
    while (j >= 0 && ++idx[j] == width[j]) idx[j--] = 0;
    if (j < 0) break;
  }
  return std::max(sum, 0.0);
}

double CopulaModel::density(double u, double v) const {
  const std::array<double, 2> p{u, v};
  return density(p);
}

double CopulaModel::cdf(std::span<const double> point) const {
  check_point(point);
  const int D = dimension();
  // Contract one axis at a time: tensor <- tensor x_j Phi_j(x_j).
  std::vector<double> cur(params_.entries().begin(), params_.entries().end());
  for (int j = D - 1; j >= 0; --j) {
    const int m = bases_[j].count();
    std::vector<double> Phi(m);
    bases_[j].Phi_all(point[j], Phi);
    const std::size_t outer = cur.size() / m;
    std::vector<double> next(outer, 0.0);
    // Axis j is currently the last (fastest) axis of `cur`.
    for (std::size_t o = 0; o < outer; ++o)
      for (int k = 0; k < m; ++k) next[o] += cur[o * m + k] * Phi[k];
    cur.swap(next);
  }
  return std::clamp(cur[0], 0.0, 1.0);
}

double CopulaModel::cdf(double u, double v) const {
  const std::array<double, 2> p{u, v};
  return cdf(p);
}

std::vector<double> CopulaModel::density_grid(const std::vector<std::vector<double>>& axis_points) const {
  const int D = dimension();
  if (static_cast<int>(axis_points.size()) != D) throw Error(Errc::invalid_dimension, "one point list per axis");
  // cur has shape (dims[0..j-1], grid[j..D-1]) after contracting axes D-1 .. j.
  std::vector<double> cur(params_.entries().begin(), params_.entries().end());
  std::size_t trailing = 1;  // product of grid sizes already contracted
  for (int j = D - 1; j >= 0; --j) {
    const int m = bases_[j].count();
    const std::size_t G = axis_points[j].size();
    // Dense phi table G x m (mostly zeros, but small).
    std::vector<double> table(G * m, 0.0);
    std::array<double, kMaxDegree + 1> vals{};
    for (std::size_t g = 0; g < G; ++g) {
      const double x = axis_points[j][g];
      if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::out_of_domain, "grid coordinate outside [0, 1]");
      const int first = bases_[j].eval_active_phi(x, vals);
      for (int r = 0; r <= bases_[j].degree(); ++r) table[g * m + first + r] = vals[r];
    }
    const std::size_t outer = cur.size() / (static_cast<std::size_t>(m) * trailing);
    std::vector<double> next(outer * G * trailing, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
      for (int k = 0; k < m; ++k) {
        const double* src = &cur[(o * m + k) * trailing];
        for (std::size_t g = 0; g < G; ++g) {
          const double w = table[g * m + k];
          if (w == 0.0) continue;
          double* dst = &next[(o * G + g) * trailing];
          for (std::size_t t = 0; t < trailing; ++t) dst[t] += w * src[t];
        }
      }
    cur.swap(next);
    trailing *= G;
  }
  for (double& v : cur) v = std::max(v, 0.0);
  return cur;
}

CopulaModel diagonal_model(const BasisSystem& sys) {
  const int n = sys.count();
  std::vector<double> entries(static_cast<std::size_t>(n) * n, 0.0);
  const auto q = sys.weights();
  for (int k = 0; k < n; ++k) entries[k * n + k] = q[k];
  std::vector<std::vector<double>> targets(2, std::vector<double>(q.begin(), q.end()));
  return CopulaModel({sys, sys}, ParamTensor({n, n}, std::move(entries), std::move(targets)));
}

CopulaModel independence_model(std::vector<BasisSystem> bases) {
  ParamTensor params = ParamTensor::zeros(bases);
  const auto strides = params.strides();
  for (std::size_t i = 0; i < params.size(); ++i) {
    double v = 1.0;
    for (std::size_t j = 0; j < bases.size(); ++j) v *= bases[j].weights()[(i / strides[j]) % bases[j].count()];
    params[i] = v;
  }
  return CopulaModel(std::move(bases), std::move(params));
}

}  // namespace bspcop
