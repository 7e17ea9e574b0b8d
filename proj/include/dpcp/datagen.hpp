#pragma once

#include <cstdint>

#include "dpcp/common.hpp"
#include "dpcp/graph.hpp"

namespace dpcp {

struct SynthConfig {
  int n_nodes = 25;
  int horizon = 600;
  int rank = 3;
  double sigma2 = 1e-3;
  double p_out = 5e-2;     // probability of +amplitude, same again for -amplitude
  double amplitude = 1.0;
  double p_obs = 0.7;
  double d_c = 0.4;
  std::uint64_t seed = 1;
};

// Ground-truth world: Y_obs = mask .* (X + O + E), X = W * Z'.
struct SyntheticDataset {
  Matrix X;      // N x T nominal loads
  Matrix W;      // N x r
  Matrix Z;      // T x r
  Matrix O;      // N x T outliers in {-amplitude, 0, +amplitude}
  Matrix E;      // N x T Gaussian noise
  Matrix mask;   // N x T in {0,1}
  Matrix Y_obs;  // N x T, zero off-mask
  ObservationSet observations() const { return {Y_obs, mask}; }
};

void validate(const SynthConfig& cfg);

// Deterministic given cfg.seed: each field draws from its own derived RNG
// stream, so e.g. the mask does not shift when the rank changes.
SyntheticDataset make_dataset(const SynthConfig& cfg);

// Dataset plus a connected geometric communication graph over its rows.
std::pair<SyntheticDataset, MeterGraph> synthesize(const SynthConfig& cfg);

}  // namespace dpcp
