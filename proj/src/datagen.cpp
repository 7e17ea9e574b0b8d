#include "dpcp/datagen.hpp"

#include <cmath>

#include "dpcp/rng.hpp"

namespace dpcp {
namespace {

// Column-major fill order; part of the documented generation contract.
template <typename F>
Matrix fill(Index rows, Index cols, F&& draw) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = draw();
  return m;
}

enum Stream : std::uint64_t { kW = 0, kZ, kOut, kNoise, kMask, kGraph };

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_nodes < 1 || cfg.horizon < 1)
    throw ValidationError("synth: node count and horizon must be positive");
  if (cfg.rank < 1 || cfg.rank > std::min(cfg.n_nodes, cfg.horizon))
    throw ValidationError("synth: rank must lie in [1, min(N,T)]");
  if (!(cfg.sigma2 >= 0.0)) throw ValidationError("synth: noise variance must be >= 0");
  if (!(cfg.p_out >= 0.0 && cfg.p_out <= 0.5))
    throw ValidationError("synth: per-sign outlier probability must lie in [0, 0.5]");
  if (!(cfg.p_obs > 0.0 && cfg.p_obs <= 1.0))
    throw ValidationError("synth: observation probability must lie in (0, 1]");
  if (!(cfg.d_c > 0.0)) throw ValidationError("synth: communication range must be positive");
}

SyntheticDataset make_dataset(const SynthConfig& cfg) {
  validate(cfg);
  const Index n = cfg.n_nodes;
  const Index t = cfg.horizon;
  const Index r = cfg.rank;

  SyntheticDataset d;
  {
    Rng g(Rng::derive(cfg.seed, kW));
    const double sd = std::sqrt(100.0 / static_cast<double>(n));
    d.W = fill(n, r, [&] { return sd * g.gaussian(); });
  }
  {
    Rng g(Rng::derive(cfg.seed, kZ));
    const double sd = std::sqrt(100.0 / static_cast<double>(t));
    d.Z = fill(t, r, [&] { return sd * g.gaussian(); });
  }
  d.X = d.W * d.Z.transpose();
  {
    Rng g(Rng::derive(cfg.seed, kOut));
    d.O = fill(n, t, [&] {
      const double u = g.uniform();
      if (u < cfg.p_out) return cfg.amplitude;
      if (u < 2.0 * cfg.p_out) return -cfg.amplitude;
      return 0.0;
    });
  }
  {
    Rng g(Rng::derive(cfg.seed, kNoise));
    const double sd = std::sqrt(cfg.sigma2);
    d.E = fill(n, t, [&] { return sd * g.gaussian(); });
  }
  {
    Rng g(Rng::derive(cfg.seed, kMask));
    d.mask = fill(n, t, [&] { return g.uniform() < cfg.p_obs ? 1.0 : 0.0; });
  }
  d.Y_obs = d.mask.cwiseProduct(d.X + d.O + d.E);
  return d;
}

std::pair<SyntheticDataset, MeterGraph> synthesize(const SynthConfig& cfg) {
  SyntheticDataset d = make_dataset(cfg);
  MeterGraph g = random_geometric_graph(cfg.n_nodes, cfg.d_c, Rng::derive(cfg.seed, kGraph));
  return {std::move(d), std::move(g)};
}

}  // namespace dpcp
