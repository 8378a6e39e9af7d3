#include "stai/geometry.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <stdexcept>
#include <string>

namespace stai {

namespace {

double shoelace_area(const SpatialWindow::Ring& ring) {
  double acc = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % n];
    acc += a[0] * b[1] - b[0] * a[1];
  }
  return 0.5 * std::abs(acc);
}

int orientation(const std::array<double, 2>& a, const std::array<double, 2>& b,
                const std::array<double, 2>& c) {
  const double v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const std::array<double, 2>& a, const std::array<double, 2>& b,
                const std::array<double, 2>& p) {
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) &&
         std::min(a[1], b[1]) <= p[1] && p[1] <= std::max(a[1], b[1]);
}

// proper or improper intersection of closed segments
bool segments_intersect(const std::array<double, 2>& p1, const std::array<double, 2>& p2,
                        const std::array<double, 2>& q1, const std::array<double, 2>& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

void validate_simple(const SpatialWindow::Ring& ring) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]))
        throw std::invalid_argument("polygon ring is self-intersecting");
    }
  }
}

}  // namespace

SpatialWindow SpatialWindow::rectangle(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmax > xmin) || !(ymax > ymin))
    throw std::invalid_argument("rectangle window must have positive extent");
  SpatialWindow w;
  w.shape_ = Rect{xmin, xmax, ymin, ymax};
  return w;
}

SpatialWindow SpatialWindow::polygon(Ring ring) {
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  if (ring.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  validate_simple(ring);
  if (!(shoelace_area(ring) > 0.0))
    throw std::invalid_argument("polygon window must have positive area");
  SpatialWindow w;
  w.shape_ = std::move(ring);
  return w;
}

bool SpatialWindow::contains(double x, double y) const {
  if (is_rectangle()) return rect().contains(x, y);
  // even-odd crossing rule; closed boundary handled by the >=/< asymmetry
  const Ring& rg = ring();
  const std::size_t n = rg.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = rg[i][0], yi = rg[i][1];
    const double xj = rg[j][0], yj = rg[j][1];
    if ((yi > y) != (yj > y)) {
      const double xcross = (xj - xi) * (y - yi) / (yj - yi) + xi;
      if (x < xcross) inside = !inside;
    }
  }
  return inside;
}

double SpatialWindow::area() const {
  if (is_rectangle()) return rect().area();
  return shoelace_area(ring());
}

Rect SpatialWindow::bounding_box() const {
  if (is_rectangle()) return rect();
  const Ring& rg = ring();
  Rect b{rg[0][0], rg[0][0], rg[0][1], rg[0][1]};
  for (const auto& v : rg) {
    b.xmin = std::min(b.xmin, v[0]);
    b.xmax = std::max(b.xmax, v[0]);
    b.ymin = std::min(b.ymin, v[1]);
    b.ymax = std::max(b.ymax, v[1]);
  }
  return b;
}

Window::Window(SpatialWindow s, double t0, double t1) : spatial(std::move(s)), tmin(t0), tmax(t1) {
  if (!(tmax > tmin)) throw std::invalid_argument("window needs tmax > tmin");
}

ScaleLadder::ScaleLadder(std::vector<double> radii, std::vector<double> half_heights)
    : r_(std::move(radii)), h_(std::move(half_heights)) {
  if (r_.empty() || r_.size() != h_.size())
    throw std::invalid_argument("scale ladder needs m >= 1 matching radii and half-heights");
  double pr = 0.0, ph = 0.0;
  for (std::size_t j = 0; j < r_.size(); ++j) {
    if (!(r_[j] > pr) || !(h_[j] > ph))
      throw std::invalid_argument("scale ladder must be strictly increasing from 0");
    pr = r_[j];
    ph = h_[j];
  }
}

VolumeGrid cylinder_grid(const Cylinder& c, GridResolution res) {
  if (res.n_xy < 2 || res.n_t < 2)
    throw std::invalid_argument("grid resolution must be at least 2 per axis");
  VolumeGrid g;
  g.x0 = c.center.x - c.r;
  g.y0 = c.center.y - c.r;
  g.t0 = c.center.t - c.h;
  g.nx = g.ny = res.n_xy;
  g.nt = res.n_t;
  g.dx = g.dy = 2.0 * c.r / res.n_xy;
  g.dt = 2.0 * c.h / res.n_t;
  return g;
}

namespace {

struct TimeSpan {
  int lo, hi;  // half-open cell index range
};

// cell index range whose midpoints fall in [a, b]
TimeSpan clip_axis(double origin, double step, int n, double a, double b) {
  if (step <= 0.0 || !(b >= a)) return {0, 0};
  int lo = std::clamp(static_cast<int>(std::ceil((a - origin) / step - 0.5)), 0, n);
  int hi = std::clamp(static_cast<int>(std::floor((b - origin) / step - 0.5)) + 1, 0, n);
  // midpoint membership is closed; fix up boundary rounding
  while (lo > 0 && origin + (lo - 0.5) * step >= a) --lo;
  while (lo < n && origin + (lo + 0.5) * step < a) ++lo;
  while (hi < n && origin + (hi + 0.5) * step <= b) ++hi;
  while (hi > lo && origin + (hi - 0.5) * step > b) --hi;
  return {lo, hi};
}

}  // namespace

double cylinder_volume_on(const VolumeGrid& g, const Cylinder& c, const Window& w) {
  return uncovered_volume_on(g, c, {}, w);
}

double uncovered_volume_on(const VolumeGrid& g, const Cylinder& c,
                           std::span<const Cylinder> neighbors, const Window& w) {
  if (c.r <= 0.0 || c.h <= 0.0 || g.nx <= 0 || g.ny <= 0 || g.nt <= 0) return 0.0;

  // restrict index ranges to window bbox and cylinder bbox up front
  const Rect wb = w.spatial.bounding_box();
  const TimeSpan sx = clip_axis(g.x0, g.dx, g.nx, std::max(wb.xmin, c.center.x - c.r),
                                std::min(wb.xmax, c.center.x + c.r));
  const TimeSpan sy = clip_axis(g.y0, g.dy, g.ny, std::max(wb.ymin, c.center.y - c.r),
                                std::min(wb.ymax, c.center.y + c.r));
  const TimeSpan st = clip_axis(g.t0, g.dt, g.nt, std::max(w.tmin, c.center.t - c.h),
                                std::min(w.tmax, c.center.t + c.h));
  const bool poly = !w.spatial.is_rectangle();

  // neighbors whose bounding box misses the active grid region cannot cover
  std::vector<const Cylinder*> active;
  active.reserve(neighbors.size());
  {
    const double gx0 = g.x0 + (sx.lo + 0.5) * g.dx, gx1 = g.x0 + (sx.hi - 0.5) * g.dx;
    const double gy0 = g.y0 + (sy.lo + 0.5) * g.dy, gy1 = g.y0 + (sy.hi - 0.5) * g.dy;
    const double gt0 = g.t0 + (st.lo + 0.5) * g.dt, gt1 = g.t0 + (st.hi - 0.5) * g.dt;
    for (const Cylinder& nb : neighbors) {
      if (nb.center.x + nb.r < gx0 || nb.center.x - nb.r > gx1 ||
          nb.center.y + nb.r < gy0 || nb.center.y - nb.r > gy1 ||
          nb.center.t + nb.h < gt0 || nb.center.t - nb.h > gt1)
        continue;
      active.push_back(&nb);
    }
    // nearest first: covered cells exit after few checks
    std::sort(active.begin(), active.end(), [&c](const Cylinder* a, const Cylinder* b) {
      const double da = sup_distance(a->center, c.center);
      const double db = sup_distance(b->center, c.center);
      return da < db;
    });
  }

  const double r2 = c.r * c.r;
  long count = 0;
  for (int it = st.lo; it < st.hi; ++it) {
    const double mt = g.t0 + (it + 0.5) * g.dt;
    if (std::abs(mt - c.center.t) > c.h) continue;
    for (int iy = sy.lo; iy < sy.hi; ++iy) {
      const double my = g.y0 + (iy + 0.5) * g.dy;
      const double dy = my - c.center.y;
      const double dy2 = dy * dy;
      if (dy2 > r2) continue;
      for (int ix = sx.lo; ix < sx.hi; ++ix) {
        const double mx = g.x0 + (ix + 0.5) * g.dx;
        const double dx = mx - c.center.x;
        if (dx * dx + dy2 > r2) continue;
        if (poly && !w.spatial.contains(mx, my)) continue;
        bool covered = false;
        for (const Cylinder* nb : active) {
          if (nb->contains(mx, my, mt)) {
            covered = true;
            break;
          }
        }
        if (!covered) ++count;
      }
    }
  }
  return static_cast<double>(count) * g.cell_volume();
}

double clipped_cylinder_volume(const Cylinder& c, const Window& w, GridResolution res) {
  return cylinder_volume_on(cylinder_grid(c, res), c, w);
}

double uncovered_volume(const Cylinder& c, std::span<const Cylinder> neighbors,
                        const Window& w, GridResolution res) {
  return uncovered_volume_on(cylinder_grid(c, res), c, neighbors, w);
}

double shell_volume(const STPoint& center, const ScaleLadder& ladder, int j, const Window& w,
                    GridResolution res, int grid_scale) {
  if (j < 0 || j >= ladder.size()) throw std::out_of_range("shell index out of range");
  if (grid_scale < 0) grid_scale = j;
  if (grid_scale < j || grid_scale >= ladder.size())
    throw std::out_of_range("shell grid scale out of range");
  const VolumeGrid g = cylinder_grid(ladder.cylinder(center, grid_scale), res);
  const double outer = cylinder_volume_on(g, ladder.cylinder(center, j), w);
  if (j == 0) return outer;  // r_0 = t_0 = 0
  const double inner = cylinder_volume_on(g, ladder.cylinder(center, j - 1), w);
  return outer - inner;
}

double union_cylinder_volume(std::span<const STPoint> centers, double r, double h,
                             const Window& w, GridResolution res) {
  if (centers.empty() || r <= 0.0 || h <= 0.0) return 0.0;
  const Rect wb = w.spatial.bounding_box();
  double x0 = wb.xmax, x1 = wb.xmin, y0 = wb.ymax, y1 = wb.ymin, t0 = w.tmax, t1 = w.tmin;
  for (const STPoint& p : centers) {
    x0 = std::min(x0, p.x - r);
    x1 = std::max(x1, p.x + r);
    y0 = std::min(y0, p.y - r);
    y1 = std::max(y1, p.y + r);
    t0 = std::min(t0, p.t - h);
    t1 = std::max(t1, p.t + h);
  }
  x0 = std::max(x0, wb.xmin);
  x1 = std::min(x1, wb.xmax);
  y0 = std::max(y0, wb.ymin);
  y1 = std::min(y1, wb.ymax);
  t0 = std::max(t0, w.tmin);
  t1 = std::min(t1, w.tmax);
  if (!(x1 > x0) || !(y1 > y0) || !(t1 > t0)) return 0.0;

  // same cell sizes as a single cylinder grid
  const double dxy = 2.0 * r / res.n_xy;
  const double dt = 2.0 * h / res.n_t;
  const int nx = std::max(1, static_cast<int>(std::ceil((x1 - x0) / dxy)));
  const int ny = std::max(1, static_cast<int>(std::ceil((y1 - y0) / dxy)));
  const int nt = std::max(1, static_cast<int>(std::ceil((t1 - t0) / dt)));
  if (static_cast<double>(nx) * ny * nt > 4e9)
    throw std::runtime_error("union volume grid too large; lower the resolution");

  const bool poly = !w.spatial.is_rectangle();
  const double r2 = r * r;
  long count = 0;
  for (int it = 0; it < nt; ++it) {
    const double mt = t0 + (it + 0.5) * dt;
    if (mt < w.tmin || mt > w.tmax) continue;
    for (int iy = 0; iy < ny; ++iy) {
      const double my = y0 + (iy + 0.5) * dxy;
      for (int ix = 0; ix < nx; ++ix) {
        const double mx = x0 + (ix + 0.5) * dxy;
        if (mx < wb.xmin || mx > wb.xmax || my < wb.ymin || my > wb.ymax) continue;
        if (poly && !w.spatial.contains(mx, my)) continue;
        for (const STPoint& p : centers) {
          if (std::abs(mt - p.t) > h) continue;
          const double dx = mx - p.x, dyv = my - p.y;
          if (dx * dx + dyv * dyv <= r2) {
            ++count;
            break;
          }
        }
      }
    }
  }
  return static_cast<double>(count) * dxy * dxy * dt;
}

bool cylinder_unclipped(const Cylinder& c, const Window& w) {
  if (!w.spatial.is_rectangle()) return false;
  const Rect& b = w.spatial.rect();
  return c.center.x - c.r >= b.xmin && c.center.x + c.r <= b.xmax &&
         c.center.y - c.r >= b.ymin && c.center.y + c.r <= b.ymax &&
         c.center.t - c.h >= w.tmin && c.center.t + c.h <= w.tmax;
}

double unclipped_cylinder_grid_volume(double r, double h, GridResolution res) {
  thread_local std::map<std::tuple<double, double, int, int>, double> cache;
  const auto key = std::make_tuple(r, h, res.n_xy, res.n_t);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  // mirrors the grid pass in relative coordinates; every time-slab midpoint
  // lies inside [-h, h], so only the disc needs counting
  const double step = 2.0 * r / res.n_xy;
  const double dt = 2.0 * h / res.n_t;
  const double r2 = r * r;
  long disc = 0;
  for (int iy = 0; iy < res.n_xy; ++iy) {
    const double dy = (iy + 0.5) * step - r;
    const double dy2 = dy * dy;
    if (dy2 > r2) continue;
    for (int ix = 0; ix < res.n_xy; ++ix) {
      const double dx = (ix + 0.5) * step - r;
      if (dx * dx + dy2 > r2) continue;
      ++disc;
    }
  }
  const double value = static_cast<double>(disc * res.n_t) * (step * step * dt);
  cache.emplace(key, value);
  return value;
}

PointPattern::PointPattern(std::vector<STPoint> points, const Window& w)
    : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y) ||
        !std::isfinite(points_[i].t))
      throw std::invalid_argument("point " + std::to_string(i) + " has non-finite coordinates");
    if (!w.contains(points_[i]))
      throw std::invalid_argument("point " + std::to_string(i) + " lies outside the window");
  }
  std::vector<int> order(points_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [this](int a, int b) {
    const STPoint& p = points_[static_cast<std::size_t>(a)];
    const STPoint& q = points_[static_cast<std::size_t>(b)];
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
    return p.t < q.t;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (same_point(points_[static_cast<std::size_t>(order[i - 1])],
                   points_[static_cast<std::size_t>(order[i])]))
      throw std::invalid_argument("pattern contains duplicate points (rows " +
                                  std::to_string(order[i - 1]) + ", " +
                                  std::to_string(order[i]) + ")");
  }
}

BinIndex::BinIndex(std::span<const STPoint> points, const Rect& spatial_box, double tmin,
                   double tmax, double r_max, double t_max)
    : points_(points) {
  if (!(r_max > 0.0) || !(t_max > 0.0))
    throw std::invalid_argument("bin index needs positive ranges");
  x0_ = spatial_box.xmin;
  y0_ = spatial_box.ymin;
  t0_ = tmin;
  cx_ = cy_ = 2.0 * r_max;
  ct_ = 2.0 * t_max;
  nx_ = std::max(1, static_cast<int>(std::ceil(spatial_box.width() / cx_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(spatial_box.height() / cy_)));
  nt_ = std::max(1, static_cast<int>(std::ceil((tmax - tmin) / ct_)));
  bins_.assign(static_cast<std::size_t>(nx_) * ny_ * nt_, {});
  for (std::size_t i = 0; i < points.size(); ++i)
    bins_[bin_of(points[i].x, points[i].y, points[i].t)].push_back(static_cast<int>(i));
}

BinIndex::BinIndex(std::span<const STPoint> points, const Window& w, double r_max, double t_max)
    : BinIndex(points, w.spatial.bounding_box(), w.tmin, w.tmax, r_max, t_max) {}

std::size_t BinIndex::bin_of(double x, double y, double t) const {
  const int ix = std::clamp(static_cast<int>((x - x0_) / cx_), 0, nx_ - 1);
  const int iy = std::clamp(static_cast<int>((y - y0_) / cy_), 0, ny_ - 1);
  const int it = std::clamp(static_cast<int>((t - t0_) / ct_), 0, nt_ - 1);
  return (static_cast<std::size_t>(it) * ny_ + iy) * nx_ + ix;
}

void BinIndex::query(const STPoint& p, double radius_xy, double radius_t,
                     std::vector<int>& out) const {
  out.clear();
  const int ix0 = std::clamp(static_cast<int>((p.x - radius_xy - x0_) / cx_), 0, nx_ - 1);
  const int ix1 = std::clamp(static_cast<int>((p.x + radius_xy - x0_) / cx_), 0, nx_ - 1);
  const int iy0 = std::clamp(static_cast<int>((p.y - radius_xy - y0_) / cy_), 0, ny_ - 1);
  const int iy1 = std::clamp(static_cast<int>((p.y + radius_xy - y0_) / cy_), 0, ny_ - 1);
  const int it0 = std::clamp(static_cast<int>((p.t - radius_t - t0_) / ct_), 0, nt_ - 1);
  const int it1 = std::clamp(static_cast<int>((p.t + radius_t - t0_) / ct_), 0, nt_ - 1);
  const double r2 = radius_xy * radius_xy;
  for (int it = it0; it <= it1; ++it)
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) {
        const auto& bucket = bins_[(static_cast<std::size_t>(it) * ny_ + iy) * nx_ + ix];
        for (int idx : bucket) {
          const STPoint& q = points_[static_cast<std::size_t>(idx)];
          if (std::abs(q.t - p.t) > radius_t) continue;
          const double dx = q.x - p.x, dy = q.y - p.y;
          if (dx * dx + dy * dy <= r2) out.push_back(idx);
        }
      }
  std::sort(out.begin(), out.end());
}

std::vector<STPoint> neighbor_query(const STPoint& p, const PointPattern& pattern,
                                    double r, double h) {
  if (r < 0.0 || h < 0.0) throw std::invalid_argument("neighbor query needs r, h >= 0");
  std::vector<STPoint> out;
  if (pattern.empty()) return out;
  if (r > 0.0 && h > 0.0) {
    // bound the bins by the pattern itself; queries outside fall into edge bins
    Rect box{pattern[0].x, pattern[0].x, pattern[0].y, pattern[0].y};
    double tmin = pattern[0].t, tmax = pattern[0].t;
    for (const STPoint& q : pattern.points()) {
      box.xmin = std::min(box.xmin, q.x);
      box.xmax = std::max(box.xmax, q.x);
      box.ymin = std::min(box.ymin, q.y);
      box.ymax = std::max(box.ymax, q.y);
      tmin = std::min(tmin, q.t);
      tmax = std::max(tmax, q.t);
    }
    box.xmax = std::max(box.xmax, box.xmin + r);
    box.ymax = std::max(box.ymax, box.ymin + r);
    tmax = std::max(tmax, tmin + h);
    BinIndex index(pattern.points(), box, tmin, tmax, r, h);
    std::vector<int> idx;
    index.query(p, 2.0 * r, 2.0 * h, idx);
    out.reserve(idx.size());
    for (int i : idx) out.push_back(pattern[i]);
    return out;
  }
  const double rr = 4.0 * r * r;
  for (const STPoint& q : pattern.points()) {
    if (std::abs(q.t - p.t) > 2.0 * h) continue;
    const double dx = q.x - p.x, dy = q.y - p.y;
    if (dx * dx + dy * dy <= rr) out.push_back(q);
  }
  return out;
}

}  // namespace stai
