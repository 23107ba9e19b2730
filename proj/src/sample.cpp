#include "bspcop/sample.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "bspcop/error.hpp"
#include "bspcop/margins.hpp"
#include "bspcop/rng.hpp"

namespace bspcop {

void SamplerConfig::validate() const {
  if (grid_resolution < 51) throw Error(Errc::invalid_argument, "sampler grid resolution must be >= 51");
  if (!(safety_factor >= 1.0)) throw Error(Errc::invalid_argument, "sampler safety factor must be >= 1");
  if (max_attempts_per_draw == 0) throw Error(Errc::invalid_argument, "sampler attempt budget must be positive");
}

Envelope max_density(const CopulaModel& model, const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<double>> axes;
  for (const auto& b : model.bases()) {
    std::set<double> pts;
    const int G = cfg.grid_resolution;
    for (int g = 0; g < G; ++g) pts.insert(static_cast<double>(g) / (G - 1));
    for (double t : b.knots()) pts.insert(t);
    axes.emplace_back(pts.begin(), pts.end());
  }
  // Contract in slabs along the first axis to bound memory for large grids.
  Envelope env;
  const std::size_t first_extent = axes[0].size();
  std::vector<std::vector<double>> slab_axes = axes;
  for (std::size_t i = 0; i < first_extent; ++i) {
    slab_axes[0] = {axes[0][i]};
    const auto vals = model.density_grid(slab_axes);
    for (double v : vals) env.grid_max = std::max(env.grid_max, v);
  }
  env.bound = env.grid_max * cfg.safety_factor;
  return env;
}

SampleRun rejection_sample(const CopulaModel& model, std::size_t count, const SamplerConfig& cfg) {
  cfg.validate();
  if (count == 0) throw Error(Errc::invalid_argument, "sample count must be >= 1");
  const Envelope env = max_density(model, cfg);
  const std::size_t D = static_cast<std::size_t>(model.dimension());

  SampleRun run;
  run.grid_max = env.grid_max;
  double bound = env.bound;
  std::vector<double> point(D);
  while (true) {
    Philox rng(cfg.seed, cfg.stream);
    run.points = Matrix(count, D);
    run.proposals = 0;
    run.accepted = 0;
    bool raised = false;
    while (run.accepted < count) {
      std::uint64_t attempts = 0;
      bool got = false;
      while (!got) {
        if (++attempts > cfg.max_attempts_per_draw)
          throw Error(Errc::sampler_budget_exhausted,
                      "no acceptance after " + std::to_string(cfg.max_attempts_per_draw) + " proposals");
        for (std::size_t j = 0; j < D; ++j) point[j] = rng.uniform();
        const double s = rng.uniform();
        const double c = model.density(point);
        ++run.proposals;
        run.max_proposal_density = std::max(run.max_proposal_density, c);
        // excess at round-off level is not a broken envelope
        if (c > bound * (1.0 + 1e-12)) {
          bound = 1.05 * c;
          raised = true;
          break;
        }
        got = s * bound <= c;
      }
      if (raised) break;
      std::copy(point.begin(), point.end(), run.points.row(run.accepted).begin());
      ++run.accepted;
    }
    if (!raised) break;
    ++run.restarts;
  }
  run.envelope = bound;
  return run;
}

std::vector<Matrix> generate_study_data(const CopulaModel& model, std::size_t N, std::size_t J, std::uint64_t seed,
                                        const SamplerConfig& base) {
  std::vector<Matrix> out;
  out.reserve(J);
  for (std::size_t j = 0; j < J; ++j) {
    SamplerConfig cfg = base;
    cfg.seed = seed;
    cfg.stream = j;
    out.push_back(rejection_sample(model, N, cfg).points);
  }
  return out;
}

CopulaModel baker_model(int n1, int n2, int n3) {
  if (n1 != n2 || n3 != 2 || n1 < 1)
    throw Error(Errc::invalid_argument, "Baker construction needs n1 == n2 >= 1 and n3 == 2");
  std::vector<BasisSystem> bases{BasisSystem::uniform(n1 - 1, n1), BasisSystem::uniform(n2 - 1, n2),
                                 BasisSystem::uniform(n3 - 1, n3)};
  ParamTensor params = ParamTensor::zeros(bases);
  for (int k1 = 0; k1 < n1; ++k1)
    for (int k2 = 0; k2 < n2; ++k2) {
      const std::size_t base = (static_cast<std::size_t>(k1) * n2 + k2) * n3;
      params[base + 0] = 1.0 / (2.0 * n1 * n2);
      params[base + 1] = (k1 == k2) ? 1.0 / (2.0 * n1) : 0.0;
    }
  return CopulaModel(std::move(bases), std::move(params));
}

BakerSample baker_trivariate(std::size_t N, int n1, int n2, int n3, std::uint64_t seed) {
  const CopulaModel model = baker_model(n1, n2, n3);
  SamplerConfig cfg;
  cfg.seed = seed;
  BakerSample out;
  out.uniform = rejection_sample(model, N, cfg).points;
  out.normal = out.uniform;
  for (double& v : out.normal.data) v = normal_quantile(v);
  return out;
}

double ks_uniform(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::empty_sample, "ks_uniform needs at least one value");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    d = std::max(d, (i + 1) / n - values[i]);
    d = std::max(d, values[i] - i / n);
  }
  return d;
}

}  // namespace bspcop
