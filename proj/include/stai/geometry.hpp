#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace stai {

struct STPoint {
  double x{0.0};
  double y{0.0};
  double t{0.0};
};

inline bool same_point(const STPoint& a, const STPoint& b) {
  return a.x == b.x && a.y == b.y && a.t == b.t;
}

// sup metric: max of Euclidean spatial distance and absolute time lag
inline double sup_distance(const STPoint& a, const STPoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::max(std::sqrt(dx * dx + dy * dy), std::abs(a.t - b.t));
}

struct Rect {
  double xmin{0.0}, xmax{1.0}, ymin{0.0}, ymax{1.0};
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
};

/// Observation region in the plane: an axis-aligned rectangle or a simple
/// (closed, non-self-intersecting) polygon. Membership is closed and
/// deterministic; area is analytic (shoelace for polygons).
class SpatialWindow {
 public:
  using Ring = std::vector<std::array<double, 2>>;

  static SpatialWindow rectangle(double xmin, double xmax, double ymin, double ymax);
  // vertex ring, implicitly closed; a duplicated closing vertex is accepted
  static SpatialWindow polygon(Ring ring);

  bool is_rectangle() const { return std::holds_alternative<Rect>(shape_); }
  const Rect& rect() const { return std::get<Rect>(shape_); }
  const Ring& ring() const { return std::get<Ring>(shape_); }

  bool contains(double x, double y) const;
  double area() const;
  Rect bounding_box() const;

 private:
  std::variant<Rect, Ring> shape_;
};

/// The spatio-temporal observation domain: spatial window times a time
/// interval. Lebesgue measure of the domain is area * (tmax - tmin).
struct Window {
  SpatialWindow spatial;
  double tmin{0.0};
  double tmax{1.0};

  Window(SpatialWindow s, double t0, double t1);

  bool contains(const STPoint& p) const {
    return p.t >= tmin && p.t <= tmax && spatial.contains(p.x, p.y);
  }
  double volume() const { return spatial.area() * (tmax - tmin); }
};

/// Closed cylinder: spatial disc of radius r crossed with a time interval of
/// half-length h around the center.
struct Cylinder {
  STPoint center;
  double r{0.0};
  double h{0.0};

  bool contains(double x, double y, double t) const {
    if (std::abs(t - center.t) > h) return false;
    const double dx = x - center.x, dy = y - center.y;
    return dx * dx + dy * dy <= r * r;
  }
  bool contains(const STPoint& p) const { return contains(p.x, p.y, p.t); }
};

/// Strictly increasing spatial radii r_1<...<r_m and temporal half-heights
/// t_1<...<t_m, with the implicit zeroth scale r_0 = t_0 = 0. Scales are
/// indexed 0..m-1 in code.
class ScaleLadder {
 public:
  ScaleLadder(std::vector<double> radii, std::vector<double> half_heights);

  int size() const { return static_cast<int>(r_.size()); }
  double radius(int j) const { return r_[static_cast<std::size_t>(j)]; }
  double half_height(int j) const { return h_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& radii() const { return r_; }
  const std::vector<double>& half_heights() const { return h_; }

  // volume of a free-standing cylinder at scale j: 2*pi*r^2*h
  double cylinder_volume(int j) const {
    return 2.0 * M_PI * radius(j) * radius(j) * half_height(j);
  }
  Cylinder cylinder(const STPoint& center, int j) const {
    return Cylinder{center, radius(j), half_height(j)};
  }

  bool operator==(const ScaleLadder& o) const { return r_ == o.r_ && h_ == o.h_; }

 private:
  std::vector<double> r_, h_;
};

/// Midpoint-rule subdivisions per cylinder bounding box (per axis).
struct GridResolution {
  int n_xy{24};
  int n_t{24};
};

/// One concrete midpoint grid: origin, cell sizes, cell counts. Exposed so
/// that cross-checks can evaluate several sets on the identical grid.
struct VolumeGrid {
  double x0{0}, y0{0}, t0{0};
  double dx{0}, dy{0}, dt{0};
  int nx{0}, ny{0}, nt{0};
  double cell_volume() const { return dx * dy * dt; }
};

// grid anchored to the cylinder's own bounding box
VolumeGrid cylinder_grid(const Cylinder& c, GridResolution res);

// count-based midpoint estimates; deterministic for fixed inputs
double cylinder_volume_on(const VolumeGrid& g, const Cylinder& c, const Window& w);
double uncovered_volume_on(const VolumeGrid& g, const Cylinder& c,
                           std::span<const Cylinder> neighbors, const Window& w);

/// Grid estimate of l(C intersect W) on the cylinder's own grid. Exact value
/// 2*pi*r^2*h is recovered up to grid error for interior cylinders.
double clipped_cylinder_volume(const Cylinder& c, const Window& w, GridResolution res);

/// Grid estimate of l((C \ union of neighbors) intersect W); neighbors share
/// C's radius and half-height. Empty neighbor set reproduces
/// clipped_cylinder_volume on the identical grid.
double uncovered_volume(const Cylinder& c, std::span<const Cylinder> neighbors,
                        const Window& w, GridResolution res);

/// Grid estimate of the shell F_j = C_j \ C_{j-1} around `center`, clipped to
/// the window. The grid is anchored to the scale `grid_scale` cylinder
/// (default: j itself); telescoping sums evaluate all shells on the grid of
/// the outermost scale involved.
double shell_volume(const STPoint& center, const ScaleLadder& ladder, int j,
                    const Window& w, GridResolution res, int grid_scale = -1);

/// Grid estimate of l(union of equal cylinders centered at `centers`,
/// clipped to W), on a grid spanning the union's bounding box with the same
/// cell sizes a single cylinder grid would use.
double union_cylinder_volume(std::span<const STPoint> centers, double r, double h,
                             const Window& w, GridResolution res);

// True when the cylinder's bounding box lies inside the window, so no
// clipping can occur (rectangle windows only; polygons always report false).
bool cylinder_unclipped(const Cylinder& c, const Window& w);

// Midpoint count of a full cylinder on its own grid divided by total cells;
// depends only on the resolution, so interior volumes need no grid pass.
double unclipped_cylinder_grid_volume(double r, double h, GridResolution res);

/// Finite configuration of distinct points inside a window.
class PointPattern {
 public:
  PointPattern() = default;
  // validates membership and pairwise distinctness
  PointPattern(std::vector<STPoint> points, const Window& w);

  const std::vector<STPoint>& points() const { return points_; }
  int size() const { return static_cast<int>(points_.size()); }
  bool empty() const { return points_.empty(); }
  const STPoint& operator[](int i) const { return points_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<STPoint> points_;
};

/// Uniform-bin spatio-temporal index over a fixed point set. Bins have edge
/// (2 r_m, 2 r_m, 2 t_m) so a Markov-range query touches at most 27 bins.
/// The index only references the points; the caller keeps them alive.
class BinIndex {
 public:
  BinIndex(std::span<const STPoint> points, const Rect& spatial_box, double tmin,
           double tmax, double r_max, double t_max);
  BinIndex(std::span<const STPoint> points, const Window& w, double r_max, double t_max);

  // indices of points q with ||p-q||_xy <= radius_xy and |p.t-q.t| <= radius_t,
  // ascending; identical to a brute-force scan
  void query(const STPoint& p, double radius_xy, double radius_t,
             std::vector<int>& out) const;

 private:
  std::size_t bin_of(double x, double y, double t) const;
  std::vector<std::vector<int>> bins_;
  std::span<const STPoint> points_;
  double x0_, y0_, t0_, cx_, cy_, ct_;
  int nx_, ny_, nt_;
};

/// Points of `pattern` related to p at scale (r, h): spatial distance at most
/// 2r and time lag at most 2h (equal-cylinder overlap relation). Matches a
/// brute-force scan exactly.
std::vector<STPoint> neighbor_query(const STPoint& p, const PointPattern& pattern,
                                    double r, double h);

}  // namespace stai
