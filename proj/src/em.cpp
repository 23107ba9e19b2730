#include "bspcop/em.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "bspcop/error.hpp"

namespace bspcop {

void ScadParams::validate() const {
  if (!(alpha >= 0.0)) throw Error(Errc::invalid_argument, "SCAD alpha must be >= 0");
  if (!(beta > 2.0)) throw Error(Errc::invalid_argument, "SCAD beta must be > 2");
}

double scad(double r, const ScadParams& p) {
  const double a = p.alpha;
  const double b = p.beta;
  if (r <= a) return a * r;
  if (r <= a * b) return (2.0 * a * b * r - r * r - a * a) / (2.0 * (b - 1.0));
  return a * a * (b + 1.0) / 2.0;
}

double scad_deriv(double r, const ScadParams& p) {
  const double a = p.alpha;
  if (r <= a) return a;
  return std::max(a * p.beta - r, 0.0) / (p.beta - 1.0);
}

// ---------------------------------------------------------------------------

ActiveWindows::ActiveWindows(std::span<const BasisSystem> bases, const PseudoSample& sample)
    : points_(sample.size()) {
  const std::size_t D = bases.size();
  if (sample.dimension() != D) throw Error(Errc::invalid_dimension, "sample dimension does not match bases");
  std::vector<std::size_t> strides(D, 1);
  std::vector<int> widths(D);
  for (int j = static_cast<int>(D) - 2; j >= 0; --j) strides[j] = strides[j + 1] * bases[j + 1].count();
  width_ = 1;
  for (std::size_t j = 0; j < D; ++j) {
    widths[j] = bases[j].degree() + 1;
    width_ *= widths[j];
  }
  cells_.resize(points_ * width_);
  weights_.resize(points_ * width_);

  std::vector<std::array<double, kMaxDegree + 1>> vals(D);
  std::vector<int> first(D), idx(D);
  for (std::size_t t = 0; t < points_; ++t) {
    auto u = sample.points.row(t);
    for (std::size_t j = 0; j < D; ++j) first[j] = bases[j].eval_active_phi(u[j], vals[j]);
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t w = 0; w < width_; ++w) {
      std::size_t flat = 0;
      double prod = 1.0;
      for (std::size_t j = 0; j < D; ++j) {
        flat += static_cast<std::size_t>(first[j] + idx[j]) * strides[j];
        prod *= vals[j][idx[j]];
      }
      cells_[t * width_ + w] = static_cast<std::uint32_t>(flat);
      weights_[t * width_ + w] = prod;
      int j = static_cast<int>(D) - 1;
      while (j >= 0 && ++idx[j] == widths[j]) idx[j--] = 0;
    }
  }
}

EStepResult e_step(const ParamTensor& params, const ActiveWindows& windows) {
  const std::size_t N = windows.points();
  if (N == 0) throw Error(Errc::empty_sample, "E-step on an empty sample");
  EStepResult out;
  out.score.assign(params.size(), 0.0);
  const auto r = params.entries();
  double loglik = 0.0;
  for (std::size_t t = 0; t < N; ++t) {
    const auto cells = windows.cells(t);
    const auto w = windows.weights(t);
    double dens = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) dens += r[cells[i]] * w[i];
    if (!(dens > 0.0))
      throw Error(Errc::zero_density, "mixture density vanishes at observation " + std::to_string(t));
    loglik += std::log(dens);
    const double inv = 1.0 / dens;
    for (std::size_t i = 0; i < cells.size(); ++i) out.score[cells[i]] += w[i] * inv;
  }
  const double invN = 1.0 / static_cast<double>(N);
  out.tau.resize(params.size());
  for (std::size_t c = 0; c < params.size(); ++c) {
    out.score[c] *= invN;
    out.tau[c] = r[c] * out.score[c];
  }
  out.mean_loglik = loglik * invN;
  return out;
}

EStepResult e_step(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases) {
  return e_step(params, ActiveWindows(bases, sample));
}

// ---------------------------------------------------------------------------

namespace {

// Sweeps whose change shrinks by less than this factor are considered stalled.
constexpr double kStallRatio = 0.5;
// Newton stops early only when the line search can make no progress; below this
// residual that is round-off, not failure.
constexpr double kFeasibilityFloor = 1e-9;

struct CellLayout {
  std::size_t D = 0;
  std::size_t cells = 0;
  std::vector<int> coords;  // cells x D

  explicit CellLayout(const TensorShape& shape) : D(shape.dims.size()) {
    cells = 1;
    for (int d : shape.dims) cells *= static_cast<std::size_t>(d);
    coords.resize(cells * D);
    std::vector<int> idx(D, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      std::copy(idx.begin(), idx.end(), coords.begin() + c * D);
      int j = static_cast<int>(D) - 1;
      while (j >= 0 && ++idx[j] == shape.dims[j]) idx[j--] = 0;
    }
  }
  int coord(std::size_t c, std::size_t j) const { return coords[c * D + j]; }
};

/// Indices with an all-zero tau slice, per axis; and the cells they pin.
struct Degeneracy {
  std::vector<std::vector<char>> index;  // [axis][k]
  std::vector<char> fixed;               // per cell
  std::vector<double> fixed_value;       // per cell, product of targets when fixed
  bool any = false;
};

Degeneracy find_degeneracy(std::span<const double> tau, const TensorShape& shape, const CellLayout& layout) {
  Degeneracy deg;
  const std::size_t D = layout.D;
  deg.index.resize(D);
  for (std::size_t j = 0; j < D; ++j) deg.index[j].assign(shape.dims[j], 1);
  for (std::size_t c = 0; c < layout.cells; ++c)
    if (tau[c] > 0.0)
      for (std::size_t j = 0; j < D; ++j) deg.index[j][layout.coord(c, j)] = 0;
  deg.fixed.assign(layout.cells, 0);
  deg.fixed_value.assign(layout.cells, 0.0);
  for (std::size_t j = 0; j < D; ++j)
    for (char f : deg.index[j]) deg.any = deg.any || f;
  if (!deg.any) return deg;
  for (std::size_t c = 0; c < layout.cells; ++c) {
    bool pinned = false;
    double v = 1.0;
    for (std::size_t j = 0; j < D; ++j) {
      const int k = layout.coord(c, j);
      pinned = pinned || deg.index[j][k];
      v *= shape.targets[j][k];
    }
    if (pinned) {
      deg.fixed[c] = 1;
      deg.fixed_value[c] = v;
    }
  }
  return deg;
}

/// Root of sum_i tau_i / (x + rest_i) = target on x > -min(rest).
double solve_root(std::span<const double> tau, std::span<const double> rest, double target, double start,
                  double root_tol) {
  if (!(target > 0.0)) throw Error(Errc::solver_nonconvergence, "non-positive constraint target in multiplier solve");
  double min_rest = std::numeric_limits<double>::infinity();
  for (double v : rest) min_rest = std::min(min_rest, v);
  const double floor_x = -min_rest;
  auto f = [&](double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < tau.size(); ++i) s += tau[i] / (x + rest[i]);
    return s - target;
  };
  double lo = floor_x;  // f(lo+) = +inf
  double hi;
  if (std::isfinite(start) && start > floor_x) {
    if (f(start) > 0.0) {
      lo = start;
      double step = std::max(1.0, std::abs(start));
      hi = start + step;
      while (f(hi) > 0.0) {
        lo = hi;
        step *= 2.0;
        hi = start + step;
        if (!std::isfinite(hi)) throw Error(Errc::solver_nonconvergence, "multiplier bracket diverged");
      }
    } else {
      hi = start;
    }
  } else {
    double step = 1.0;
    hi = floor_x + step;
    while (f(hi) > 0.0) {
      lo = hi;
      step *= 2.0;
      hi = floor_x + step;
      if (!std::isfinite(hi)) throw Error(Errc::solver_nonconvergence, "multiplier bracket diverged");
    }
  }
  while (hi - lo > root_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mid <= floor_x || f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Multipliers solve_multipliers(std::span<const double> tau, const TensorShape& shape, std::span<const double> pdot,
                              const FitConfig& cfg, const Multipliers* warm) {
  const CellLayout layout(shape);
  const std::size_t D = layout.D;
  if (D < 2) throw Error(Errc::invalid_dimension, "multiplier solve needs at least two axes");
  if (tau.size() != layout.cells || pdot.size() != layout.cells)
    throw Error(Errc::invalid_dimension, "tau/pdot size does not match tensor shape");

  const Degeneracy deg = find_degeneracy(tau, shape, layout);

  Multipliers mult;
  if (warm != nullptr && warm->values.size() == D) {
    mult.values = warm->values;
  } else {
    mult.values.resize(D);
    for (std::size_t j = 0; j < D; ++j) mult.values[j].assign(shape.dims[j], cfg.mu0);
  }

  // Active cells per (axis, index), with the constraint target reduced by pinned mass.
  std::vector<std::vector<std::vector<std::size_t>>> slices(D);
  std::vector<std::vector<double>> adj_target(D);
  for (std::size_t j = 0; j < D; ++j) {
    slices[j].resize(shape.dims[j]);
    adj_target[j] = shape.targets[j];
  }
  for (std::size_t c = 0; c < layout.cells; ++c) {
    for (std::size_t j = 0; j < D; ++j) {
      const int k = layout.coord(c, j);
      if (deg.fixed[c])
        adj_target[j][k] -= deg.fixed_value[c];
      else if (tau[c] > 0.0)
        slices[j][k].push_back(c);
    }
  }

  std::vector<double> den(layout.cells);
  std::vector<double> t_buf, r_buf;
  auto refresh_den = [&] {
    for (std::size_t c = 0; c < layout.cells; ++c) {
      double s = pdot[c];
      for (std::size_t j = 0; j < D; ++j) s += mult.values[j][layout.coord(c, j)];
      den[c] = s;
    }
  };

  auto solve_family = [&](std::size_t j) {
    refresh_den();
    for (int k = 0; k < shape.dims[j]; ++k) {
      if (deg.index[j][k]) continue;
      const auto& cells = slices[j][k];
      t_buf.resize(cells.size());
      r_buf.resize(cells.size());
      const double cur = mult.values[j][k];
      for (std::size_t i = 0; i < cells.size(); ++i) {
        t_buf[i] = tau[cells[i]];
        r_buf[i] = den[cells[i]] - cur;
      }
      mult.values[j][k] = solve_root(t_buf, r_buf, adj_target[j][k], cur, cfg.root_tol);
    }
  };

  auto recentre = [&](std::size_t j) {
    const auto& q = shape.targets[j];
    double shift = 0.0;
    double qsum = 0.0;
    for (int k = 0; k < shape.dims[j]; ++k) {
      shift += q[k] * mult.values[j][k];
      qsum += q[k];
    }
    shift -= qsum * cfg.mu0;
    for (double& v : mult.values[j]) v -= shift;
  };

  // Largest marginal residual of the tensor implied by the current multipliers.
  std::vector<std::vector<double>> marg(D);
  auto constraint_residual = [&] {
    refresh_den();
    for (std::size_t j = 0; j < D; ++j) marg[j].assign(shape.dims[j], 0.0);
    for (std::size_t c = 0; c < layout.cells; ++c) {
      double r;
      if (deg.fixed[c])
        r = deg.fixed_value[c];
      else if (tau[c] > 0.0)
        r = tau[c] / den[c];
      else
        continue;
      for (std::size_t j = 0; j < D; ++j) marg[j][layout.coord(c, j)] += r;
    }
    double worst = 0.0;
    for (std::size_t j = 0; j < D; ++j)
      for (int k = 0; k < shape.dims[j]; ++k) worst = std::max(worst, std::abs(marg[j][k] - shape.targets[j][k]));
    return worst;
  };

  const std::size_t anchor = D - 1;
  double prev_change = std::numeric_limits<double>::infinity();
  int sweep = 1;
  for (; sweep <= cfg.max_inner_iters; ++sweep) {
    const auto before = mult.values;
    solve_family(anchor);
    for (std::size_t j = 0; j < anchor; ++j) {
      solve_family(j);
      recentre(j);
    }
    double change = 0.0;
    for (std::size_t j = 0; j < D; ++j)
      for (std::size_t k = 0; k < mult.values[j].size(); ++k)
        change = std::max(change, std::abs(mult.values[j][k] - before[j][k]));
    mult.sweeps = sweep;
    mult.last_change = change;
    if (constraint_residual() < cfg.inner_tol) return mult;
    if (change < cfg.inner_tol) break;
    // Nearly decoupled blocks of cells make the sweeps contract very slowly; hand
    // over to Newton once the contraction rate shows it.
    if (sweep >= 3 && change > kStallRatio * prev_change) break;
    prev_change = change;
  }

  // Newton on the constraint equations F(m) = 0, i.e. on the convex dual
  // g(m) = -sum tau log(den) + sum m * target, whose Hessian is J = -dF/dm.
  std::vector<std::pair<std::size_t, int>> unknowns;  // (axis, index) of non-degenerate multipliers
  std::vector<std::vector<int>> pos(D);
  for (std::size_t j = 0; j < D; ++j) {
    pos[j].assign(shape.dims[j], -1);
    for (int k = 0; k < shape.dims[j]; ++k)
      if (!deg.index[j][k]) {
        pos[j][k] = static_cast<int>(unknowns.size());
        unknowns.emplace_back(j, k);
      }
  }
  std::vector<std::size_t> active;
  for (std::size_t c = 0; c < layout.cells; ++c)
    if (!deg.fixed[c] && tau[c] > 0.0) active.push_back(c);
  const Eigen::Index P = static_cast<Eigen::Index>(unknowns.size());

  // Residual vector at the current multipliers; false if some denominator is not positive.
  Eigen::VectorXd F(P);
  auto residuals = [&](Eigen::VectorXd& out) {
    refresh_den();
    out.setZero();
    for (std::size_t c : active) {
      if (!(den[c] > 0.0)) return false;
      const double r = tau[c] / den[c];
      for (std::size_t a = 0; a < D; ++a) out[pos[a][layout.coord(c, a)]] += r;
    }
    for (Eigen::Index i = 0; i < P; ++i) out[i] -= adj_target[unknowns[i].first][unknowns[i].second];
    return true;
  };

  if (!residuals(F)) throw Error(Errc::solver_nonconvergence, "multipliers left the admissible region");
  double merit = F.squaredNorm();
  Eigen::VectorXd F_try(P);
  for (; sweep <= cfg.max_inner_iters; ++sweep) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(P, P);
    for (std::size_t c : active) {
      const double h = tau[c] / (den[c] * den[c]);
      for (std::size_t a = 0; a < D; ++a) {
        const int ia = pos[a][layout.coord(c, a)];
        for (std::size_t b = 0; b < D; ++b) H(ia, pos[b][layout.coord(c, b)]) += h;
      }
    }
    // Pseudo-inverse step: gauge directions are null and carry no information.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double cutoff = 1e-14 * lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd coef = eig.eigenvectors().transpose() * F;
    for (Eigen::Index e = 0; e < P; ++e) coef[e] = lam[e] > cutoff ? coef[e] / lam[e] : 0.0;
    const Eigen::VectorXd step = eig.eigenvectors() * coef;

    const auto saved = mult.values;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      for (Eigen::Index i = 0; i < P; ++i) {
        const auto [j, k] = unknowns[i];
        mult.values[j][k] = saved[j][k] + t * step[i];
      }
      if (residuals(F_try) && F_try.squaredNorm() < merit) {
        accepted = true;
        break;
      }
    }
    double change = 0.0;
    if (accepted) {
      F = F_try;
      merit = F.squaredNorm();
      change = t * step.cwiseAbs().maxCoeff();
    } else {
      mult.values = saved;
      refresh_den();
    }
    mult.sweeps = sweep;
    mult.last_change = change;
    const double residual = constraint_residual();
    if (residual < cfg.inner_tol || !accepted) {
      // Without progress, a residual at round-off level is still a solution.
      if (residual > kFeasibilityFloor)
        throw Error(Errc::solver_nonconvergence, "multiplier Newton step stalled at residual " + std::to_string(residual));
      // Exact gauge fix: shift each non-anchor family and compensate on the anchor.
      for (std::size_t j = 0; j < anchor; ++j) {
        double shift = 0.0, qsum = 0.0;
        for (int k = 0; k < shape.dims[j]; ++k) {
          shift += shape.targets[j][k] * mult.values[j][k];
          qsum += shape.targets[j][k];
        }
        shift -= qsum * cfg.mu0;
        for (double& v : mult.values[j]) v -= shift;
        for (double& v : mult.values[anchor]) v += shift;
      }
      return mult;
    }
  }
  throw Error(Errc::solver_nonconvergence, "multiplier solve did not converge within " +
                                               std::to_string(cfg.max_inner_iters) + " iterations");
}

ParamTensor m_step(std::span<const double> tau, const Multipliers& mult, std::span<const double> pdot,
                   const TensorShape& shape) {
  const CellLayout layout(shape);
  if (tau.size() != layout.cells || pdot.size() != layout.cells || mult.values.size() != layout.D)
    throw Error(Errc::invalid_dimension, "M-step inputs do not match tensor shape");
  const Degeneracy deg = find_degeneracy(tau, shape, layout);
  std::vector<double> r(layout.cells, 0.0);
  for (std::size_t c = 0; c < layout.cells; ++c) {
    if (deg.fixed[c]) {
      r[c] = deg.fixed_value[c];
      continue;
    }
    if (!(tau[c] > 0.0)) continue;
    double den = pdot[c];
    for (std::size_t j = 0; j < layout.D; ++j) den += mult.values[j][layout.coord(c, j)];
    if (!(den > 0.0)) throw Error(Errc::negative_denominator, "non-positive M-step denominator");
    r[c] = tau[c] / den;
  }
  return ParamTensor(shape.dims, std::move(r), shape.targets);
}

// ---------------------------------------------------------------------------

ParamTensor init_param(std::span<const BasisSystem> bases, const PseudoSample& sample) {
  if (sample.size() == 0) throw Error(Errc::empty_sample, "initializer needs at least one observation");
  const ActiveWindows windows(bases, sample);
  ParamTensor out = ParamTensor::zeros(bases);
  for (std::size_t t = 0; t < windows.points(); ++t) {
    const auto cells = windows.cells(t);
    const auto w = windows.weights(t);
    for (std::size_t i = 0; i < cells.size(); ++i) out[cells[i]] += w[i];
  }
  const auto strides = out.strides();
  const double invN = 1.0 / static_cast<double>(sample.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    double qprod = 1.0;
    for (std::size_t j = 0; j < bases.size(); ++j) qprod *= bases[j].weights()[(c / strides[j]) % bases[j].count()];
    out[c] *= qprod * invN;
  }
  return out;
}

double mean_loglik(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases) {
  return e_step(params, sample, bases).mean_loglik;
}

double total_penalty(const ParamTensor& params, const ScadParams& p) {
  if (p.alpha == 0.0) return 0.0;
  double s = 0.0;
  for (double r : params.entries()) s += scad(r, p);
  return s;
}

double penalized_loglik(const ParamTensor& params, const PseudoSample& sample, std::span<const BasisSystem> bases,
                        const ScadParams& p) {
  return mean_loglik(params, sample, bases) - total_penalty(params, p);
}

double kkt_residual(const ParamTensor& params, std::span<const double> score, const Multipliers& mult,
                    const ScadParams& p, double threshold) {
  const TensorShape shape = TensorShape::of(params);
  const CellLayout layout(shape);
  double worst = 0.0;
  for (std::size_t c = 0; c < layout.cells; ++c) {
    if (!(params[c] > threshold)) continue;
    double den = scad_deriv(params[c], p);
    for (std::size_t j = 0; j < layout.D; ++j) den += mult.values[j][layout.coord(c, j)];
    worst = std::max(worst, std::abs(score[c] - den));
  }
  return worst;
}

// ---------------------------------------------------------------------------

FitReport fit_nd(const PseudoSample& sample, std::span<const BasisSystem> bases, const ScadParams& p,
                 const FitConfig& cfg) {
  p.validate();
  if (bases.size() < 2) throw Error(Errc::invalid_dimension, "fit needs at least two axes");
  if (sample.size() == 0) throw Error(Errc::empty_sample, "fit needs at least one observation");
  if (!(cfg.outer_tol > 0.0 && cfg.inner_tol > 0.0 && cfg.root_tol > 0.0) || cfg.max_outer_iters < 1 ||
      cfg.max_inner_iters < 1)
    throw Error(Errc::invalid_argument, "fit tolerances and iteration limits must be positive");

  const ActiveWindows windows(bases, sample);
  FitReport rep;
  rep.scad = p;
  rep.config = cfg;
  ParamTensor R = init_param(bases, sample);
  const TensorShape shape = TensorShape::of(R);
  std::vector<double> pdot(R.size());
  Multipliers mult;
  bool have_mult = false;

  auto track_tau = [&](const EStepResult& e) {
    const double mass = std::accumulate(e.tau.begin(), e.tau.end(), 0.0);
    rep.max_tau_mass_error = std::max(rep.max_tau_mass_error, std::abs(mass - 1.0));
  };

  double change = std::numeric_limits<double>::infinity();
  for (int s = 0;; ++s) {
    const EStepResult e = e_step(R, windows);
    track_tau(e);
    if (s > 0) {
      rep.lpstar_trajectory.push_back(e.mean_loglik);
      rep.lp_trajectory.push_back(e.mean_loglik - total_penalty(R, p));
      rep.kkt_residual = kkt_residual(R, e.score, mult, p, cfg.kkt_threshold);
      if (change < cfg.outer_tol && (cfg.kkt_tol <= 0.0 || rep.kkt_residual <= cfg.kkt_tol)) {
        rep.converged = true;
        break;
      }
    }
    if (s == cfg.max_outer_iters) break;

    for (std::size_t c = 0; c < R.size(); ++c) pdot[c] = p.alpha == 0.0 ? 0.0 : scad_deriv(R[c], p);
    mult = solve_multipliers(e.tau, shape, pdot, cfg, (cfg.warm_start && have_mult) ? &mult : nullptr);
    have_mult = true;
    rep.max_inner_sweeps = std::max(rep.max_inner_sweeps, mult.sweeps);
    ParamTensor next = m_step(e.tau, mult, pdot, shape);
    rep.max_constraint_residual = std::max(rep.max_constraint_residual, validate(next, bases).max_residual());

    change = 0.0;
    for (std::size_t c = 0; c < R.size(); ++c) change = std::max(change, std::abs(next[c] - R[c]));
    R = std::move(next);
    rep.iterations = s + 1;
    rep.final_change = change;
  }

  rep.params = std::move(R);
  rep.multipliers = std::move(mult);
  return rep;
}

FitReport fit(const PseudoSample& sample, std::span<const BasisSystem> bases, const ScadParams& p,
              const FitConfig& cfg) {
  if (bases.size() != 2) throw Error(Errc::invalid_dimension, "bivariate fit needs exactly two bases");
  return fit_nd(sample, bases, p, cfg);
}

}  // namespace bspcop
