#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stai/geometry.hpp"
#include "stai/intensity.hpp"

namespace stai {

/// Interaction parameters stored on the log scale, eta_j = log gamma_j,
/// together with their scales. The volume-scaled presentation used in
/// reports is theta_j = 2*pi*r_j^2*t_j * eta_j.
struct InteractionParams {
  std::vector<double> eta;
  ScaleLadder ladder;

  InteractionParams(std::vector<double> eta_in, ScaleLadder ladder_in);

  static InteractionParams from_theta_scaled(std::span<const double> theta, ScaleLadder ladder);

  int size() const { return ladder.size(); }
  double gamma(int j) const { return std::exp(eta[static_cast<std::size_t>(j)]); }
  double theta_scaled(int j) const {
    return ladder.cylinder_volume(j) * eta[static_cast<std::size_t>(j)];
  }
};

/// Immutable model: interaction parameters, intensity surface, window and
/// volume-grid resolution. Safe to share across threads after construction.
struct ModelSpec {
  InteractionParams params;
  IntensitySurface intensity;
  Window window;
  GridResolution resolution;

  ModelSpec(InteractionParams p, IntensitySurface i, Window w, GridResolution r = {});

  // sup of the intensity over the window, computed at construction
  double intensity_bound() const { return intensity_bound_; }

 private:
  double intensity_bound_;
};

/// Per-scale uncovered volumes s_j = l(C_j(p) \ union of pattern cylinders),
/// clipped to the window.
struct SuffStats {
  std::vector<double> s;
};

/// Sufficient statistics of p against the covering union of `pattern`.
/// When `self` is set, pattern point `*self` is excluded from the union
/// (the configuration-minus-own-point convention for data points).
SuffStats suff_stats(const STPoint& p, const PointPattern& pattern, const ModelSpec& spec,
                     std::optional<int> self = std::nullopt);
SuffStats suff_stats(const STPoint& p, const PointPattern& pattern, const BinIndex& index,
                     const ModelSpec& spec, std::optional<int> self = std::nullopt);

/// log of the Papangelou conditional intensity at p given `pattern`
/// (product form): log lambda(p) - sum_j eta_j s_j, or -infinity where
/// lambda(p) = 0. Scales with eta_j = 0 contribute exactly zero.
double log_papangelou(const STPoint& p, const PointPattern& pattern, const ModelSpec& spec,
                      std::optional<int> self = std::nullopt);
double log_papangelou(const STPoint& p, const PointPattern& pattern, const BinIndex& index,
                      const ModelSpec& spec, std::optional<int> self = std::nullopt);

/// Shell-decomposed evaluation of the same quantity: the concentric shells
/// F_j of p are integrated against the per-shell energies sum_{i>=j} eta_i
/// restricted to points uncovered at scale i. Used as an independent route
/// for cross-checking the product form.
double log_papangelou_shell_form(const STPoint& p, const PointPattern& pattern,
                                 const ModelSpec& spec);

/// log p(pattern + add) - log p(pattern); identical to log_papangelou.
double log_density_ratio(const PointPattern& pattern, const STPoint& add,
                         const ModelSpec& spec);

/// log of the unnormalized density: sum_p log lambda(p) minus
/// sum_j eta_j * l(union of scale-j cylinders, clipped). Empty pattern -> 0.
double log_unnormalized_density(const PointPattern& pattern, const ModelSpec& spec);

namespace detail {

// span-based cores for sampler hot paths; assume `pts` is a valid
// configuration and `candidates` (when given) is a superset of the
// scale-j neighbors of p for every scale
SuffStats suff_stats_span(const STPoint& p, std::span<const STPoint> pts, int self,
                          const ModelSpec& spec, const std::vector<int>* candidates);
double log_papangelou_span(const STPoint& p, std::span<const STPoint> pts, int self,
                           const ModelSpec& spec, const std::vector<int>* candidates);

}  // namespace detail

}  // namespace stai
