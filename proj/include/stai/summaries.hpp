#pragma once

#include <span>
#include <string>
#include <vector>

#include "stai/geometry.hpp"
#include "stai/intensity.hpp"
#include "stai/rng.hpp"

namespace stai {

enum class TemporalJitter { none, uniform_within_week };

/// Displace duplicated spatial locations uniformly inside a disc of radius
/// max_spatial and, optionally, replace week indices k with draws from
/// [k, k+1). Points pushed outside the window are redrawn; the output is
/// pairwise distinct.
PointPattern jitter(const PointPattern& pattern, double max_spatial, TemporalJitter mode,
                    const Window& w, Rng& rng);

struct PcfEstimate {
  std::vector<double> r;
  std::vector<double> g;
  double bandwidth{0.0};
  std::string correction{"translation"};
};

struct AcfEstimate {
  std::vector<double> acf;  // lags 0..max_lag
  double conf_band{0.0};    // +-1.96 / sqrt(T)
};

// Stoyan's rule of thumb: 0.15 / sqrt(n / area)
double stoyan_bandwidth(int n, double area);

/// Pair correlation estimate with an Epanechnikov kernel and translation
/// edge correction, under an assumed stationary isotropic pattern; the
/// intensity is estimated as n / area.
PcfEstimate pcf(std::span<const Point2> points, const SpatialWindow& window, double bandwidth,
                std::span<const double> r_grid);

/// Sample autocorrelation of a series (mean-centered, lag-k covariance over
/// variance). Throws on constant input.
AcfEstimate acf(std::span<const double> series, int max_lag);

/// Interpretive scale bounds for the ladder search: half the distance where
/// the pcf settles at 1, and half the largest significantly correlated lag.
struct RangeReport {
  double pcf_flat_from{0.0};     // first r with |g - 1| within the band onward
  double suggested_r_max{0.0};   // half of the above
  int acf_significant_lag{0};    // largest lag outside the confidence band
  double suggested_t_max{0.0};   // half of the above
};

RangeReport range_report(const PcfEstimate& pcf_est, const AcfEstimate& acf_est,
                         double pcf_band = 0.1);

}  // namespace stai
