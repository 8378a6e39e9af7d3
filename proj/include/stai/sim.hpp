#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stai/model.hpp"
#include "stai/rng.hpp"

namespace stai {

struct MhConfig {
  long iterations{20000};
  std::uint64_t seed{0};
  PointPattern initial{};  // default: empty configuration
  long trace_every{0};     // 0 = trace off
  bool brute_force_neighbors{false};
};

struct BdConfig {
  long max_events{0};     // 0 = unbounded; then time_budget must be set
  double time_budget{0};  // 0 = unbounded; jump-chain time units
  std::uint64_t seed{0};
  PointPattern initial{};
  long trace_every{1};
  bool brute_force_neighbors{false};
};

struct TraceRow {
  long iteration{0};
  int n{0};
  double log_density{0.0};  // accumulated from accepted transition ratios
  bool accepted{false};
  double sojourn{0.0};  // birth-and-death chains only
};

struct ChainTrace {
  std::vector<TraceRow> rows;
  long accepted{0};
  long proposals{0};
};

/// Inhomogeneous Poisson sample on the window by thinning a homogeneous
/// process at the surface's upper bound. Throws if the bound is not finite
/// or an evaluation exceeds it.
PointPattern sample_poisson(const IntensitySurface& intensity, const Window& w, Rng& rng);

/// Uniform draw from the window by rejection sampling from its bounding box.
STPoint uniform_window_point(const Window& w, Rng& rng);

/// Birth acceptance ratio r(x, u) = |W| / (n+1) * lambda(u; x); zero when
/// lambda(u) = 0.
double mh_ratio(const PointPattern& pattern, const STPoint& candidate, const ModelSpec& spec);

/// Discrete-time Metropolis-Hastings chain: births and deaths proposed with
/// probability 1/2 each, birth locations uniform, death victims uniform.
/// A death proposed at the empty configuration consumes the iteration.
std::pair<PointPattern, ChainTrace> run_mh(const ModelSpec& spec, const MhConfig& cfg);

/// Continuous-time birth-and-death jump chain (constant death rate 1) with a
/// constant rejection envelope w = sup lambda * prod_{eta_j<0}
/// exp(-eta_j * 2 pi r_j^2 t_j). Sojourn times accumulate across rejected
/// birth proposals. Stops after max_events jumps or once the accumulated
/// time passes time_budget.
std::pair<PointPattern, ChainTrace> run_bd(const ModelSpec& spec, const BdConfig& cfg);

}  // namespace stai
