#pragma once

#include <array>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "stai/geometry.hpp"
#include "stai/rng.hpp"

namespace stai {

struct Point2 {
  double x{0.0};
  double y{0.0};
};

/// Isotropic Gaussian kernel intensity estimate: sums kernel masses, so the
/// integral over the plane is the sample size. Optional uniform edge
/// correction divides by the kernel mass falling inside the window.
class KdeSurface {
 public:
  KdeSurface(std::vector<Point2> sample, double bandwidth, SpatialWindow window,
             bool edge_correction);

  double operator()(double x, double y) const;
  // numerical sup over a fine grid covering `box`, with slack
  double sup_over(const Rect& box) const;

  const std::vector<Point2>& sample() const { return sample_; }
  double bandwidth() const { return bandwidth_; }
  bool edge_correction() const { return edge_correction_; }
  const SpatialWindow& window() const { return window_; }

 private:
  double correction_mass(double x, double y) const;
  std::vector<Point2> sample_;
  double bandwidth_;
  SpatialWindow window_;
  bool edge_correction_;
};

KdeSurface fit_kde(std::vector<Point2> sample, double bandwidth, SpatialWindow window,
                   bool edge_correction = true);

// Scott's rule for 2-D samples: sigma * n^(-1/6)
double scott_bandwidth(std::span<const Point2> sample);

/// Weekly seasonal curve: intercept, three harmonic pairs of period 52 and a
/// linear trend. Raw evaluation may go negative; clamped() floors at zero.
struct HarmonicCurve {
  double c0{0.0};
  double e1{0.0};  // trend offset (kept for serialization; fits fold it into c0)
  double e2{0.0};  // trend slope
  std::array<double, 3> c{};
  std::array<double, 3> d{};
  double period{52.0};

  double operator()(double t) const;
  double clamped(double t) const { return std::max(0.0, (*this)(t)); }
};

struct HarmonicFit {
  HarmonicCurve curve;
  double r_squared{0.0};
  double residual_sd{0.0};
  int n_obs{0};
};

/// Ordinary least squares on [1, cos(2*pi*j*t/52), sin(2*pi*j*t/52) (j=1..3), t].
/// Throws on a rank-deficient design (for example constant t).
HarmonicFit fit_harmonic(std::span<const std::pair<double, double>> counts);

/// Node-centered 3-D lookup table over a window with trilinear interpolation.
struct GridSurface {
  int nx{2}, ny{2}, nt{2};
  std::vector<double> values;  // x fastest, then y, then t
  Rect box;
  double tmin{0.0}, tmax{1.0};

  double operator()(double x, double y, double t) const;
  double max_value() const;
};

/// The inhomogeneity surface lambda(x, t): constant, KDE(x) * Z(t) / rescale,
/// or a gridded lookup. Evaluation is nonnegative and bounded on the window.
class IntensitySurface {
 public:
  struct Constant {
    double value;
  };
  struct Product {
    KdeSurface spatial;
    HarmonicCurve temporal;
    double rescale;
  };

  static IntensitySurface constant(double value);
  static IntensitySurface product(KdeSurface spatial, HarmonicCurve temporal,
                                  double rescale = 100.0);
  static IntensitySurface grid(GridSurface g);

  double operator()(const STPoint& p) const;

  /// Upper bound of the surface over the given window, for rejection
  /// sampling. Exact for constant and grid variants; for products it is a
  /// fine-grid sup inflated by 25%, and the samplers verify the bound on
  /// every draw.
  double upper_bound(const Window& w) const;

  bool is_constant() const { return std::holds_alternative<Constant>(v_); }
  bool is_product() const { return std::holds_alternative<Product>(v_); }
  bool is_grid() const { return std::holds_alternative<GridSurface>(v_); }
  const Constant& as_constant() const { return std::get<Constant>(v_); }
  const Product& as_product() const { return std::get<Product>(v_); }
  const GridSurface& as_grid() const { return std::get<GridSurface>(v_); }

 private:
  std::variant<Constant, Product, GridSurface> v_;
};

inline double eval_intensity(const IntensitySurface& s, const STPoint& p) { return s(p); }

/// Midpoint-grid integral of the surface over the window (product surfaces
/// factor into a spatial and a temporal pass). The expected count of a
/// Poisson process with this intensity.
double integrate_intensity(const IntensitySurface& s, const Window& w, int cells_per_axis = 48);

/// Census-section stand-in for the population sample: `count` points drawn
/// uniformly inside each region.
struct CensusSection {
  SpatialWindow region;
  long count{0};
};

std::vector<Point2> synthesize_population(std::span<const CensusSection> sections, Rng& rng);

}  // namespace stai
