#include "stai/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stai {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

InteractionParams::InteractionParams(std::vector<double> eta_in, ScaleLadder ladder_in)
    : eta(std::move(eta_in)), ladder(std::move(ladder_in)) {
  if (static_cast<int>(eta.size()) != ladder.size())
    throw std::invalid_argument("interaction parameters: eta length must match ladder");
  for (double e : eta)
    if (!std::isfinite(e)) throw std::invalid_argument("interaction parameters: eta must be finite");
}

InteractionParams InteractionParams::from_theta_scaled(std::span<const double> theta,
                                                       ScaleLadder ladder) {
  if (static_cast<int>(theta.size()) != ladder.size())
    throw std::invalid_argument("interaction parameters: theta length must match ladder");
  std::vector<double> eta(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j)
    eta[j] = theta[j] / ladder.cylinder_volume(static_cast<int>(j));
  return InteractionParams(std::move(eta), std::move(ladder));
}

ModelSpec::ModelSpec(InteractionParams p, IntensitySurface i, Window w, GridResolution r)
    : params(std::move(p)), intensity(std::move(i)), window(std::move(w)), resolution(r) {
  if (resolution.n_xy < 2 || resolution.n_t < 2)
    throw std::invalid_argument("model spec: grid resolution must be at least 2 per axis");
  intensity_bound_ = intensity.upper_bound(window);
  if (!std::isfinite(intensity_bound_))
    throw std::invalid_argument("model spec: intensity is not bounded on the window");
}

namespace detail {

namespace {

// s_j for one scale; `candidates` indexes pts (superset of scale-j neighbors)
double scale_stat(const STPoint& p, std::span<const STPoint> pts, int self, int j,
                  const ModelSpec& spec, const std::vector<int>* candidates,
                  std::vector<Cylinder>& scratch) {
  const double r = spec.params.ladder.radius(j);
  const double h = spec.params.ladder.half_height(j);
  scratch.clear();
  const double rr = 4.0 * r * r;
  const auto consider = [&](int idx) {
    if (idx == self) return;
    const STPoint& q = pts[static_cast<std::size_t>(idx)];
    if (std::abs(q.t - p.t) > 2.0 * h) return;
    const double dx = q.x - p.x, dy = q.y - p.y;
    if (dx * dx + dy * dy <= rr) scratch.push_back(Cylinder{q, r, h});
  };
  if (candidates) {
    for (int idx : *candidates) consider(idx);
  } else {
    for (int idx = 0; idx < static_cast<int>(pts.size()); ++idx) consider(idx);
  }
  const Cylinder c{p, r, h};
  if (scratch.empty() && cylinder_unclipped(c, spec.window))
    return unclipped_cylinder_grid_volume(r, h, spec.resolution);
  return uncovered_volume(c, scratch, spec.window, spec.resolution);
}

}  // namespace

SuffStats suff_stats_span(const STPoint& p, std::span<const STPoint> pts, int self,
                          const ModelSpec& spec, const std::vector<int>* candidates) {
  const int m = spec.params.size();
  SuffStats out;
  out.s.resize(static_cast<std::size_t>(m));
  std::vector<Cylinder> scratch;
  for (int j = 0; j < m; ++j)
    out.s[static_cast<std::size_t>(j)] = scale_stat(p, pts, self, j, spec, candidates, scratch);
  return out;
}

double log_papangelou_span(const STPoint& p, std::span<const STPoint> pts, int self,
                           const ModelSpec& spec, const std::vector<int>* candidates) {
  const double lambda = spec.intensity(p);
  if (!(lambda > 0.0)) return kNegInf;
  double acc = std::log(lambda);
  std::vector<Cylinder> scratch;
  for (int j = 0; j < spec.params.size(); ++j) {
    const double eta = spec.params.eta[static_cast<std::size_t>(j)];
    if (eta == 0.0) continue;  // Poisson reduction is exact
    acc -= eta * scale_stat(p, pts, self, j, spec, candidates, scratch);
  }
  return acc;
}

}  // namespace detail

SuffStats suff_stats(const STPoint& p, const PointPattern& pattern, const ModelSpec& spec,
                     std::optional<int> self) {
  return detail::suff_stats_span(p, pattern.points(), self.value_or(-1), spec, nullptr);
}

SuffStats suff_stats(const STPoint& p, const PointPattern& pattern, const BinIndex& index,
                     const ModelSpec& spec, std::optional<int> self) {
  const int m = spec.params.size();
  std::vector<int> candidates;
  index.query(p, 2.0 * spec.params.ladder.radius(m - 1),
              2.0 * spec.params.ladder.half_height(m - 1), candidates);
  return detail::suff_stats_span(p, pattern.points(), self.value_or(-1), spec, &candidates);
}

double log_papangelou(const STPoint& p, const PointPattern& pattern, const ModelSpec& spec,
                      std::optional<int> self) {
  return detail::log_papangelou_span(p, pattern.points(), self.value_or(-1), spec, nullptr);
}

double log_papangelou(const STPoint& p, const PointPattern& pattern, const BinIndex& index,
                      const ModelSpec& spec, std::optional<int> self) {
  const int m = spec.params.size();
  std::vector<int> candidates;
  index.query(p, 2.0 * spec.params.ladder.radius(m - 1),
              2.0 * spec.params.ladder.half_height(m - 1), candidates);
  return detail::log_papangelou_span(p, pattern.points(), self.value_or(-1), spec, &candidates);
}

double log_papangelou_shell_form(const STPoint& p, const PointPattern& pattern,
                                 const ModelSpec& spec) {
  const double lambda = spec.intensity(p);
  if (!(lambda > 0.0)) return kNegInf;

  const ScaleLadder& lad = spec.params.ladder;
  const int m = lad.size();
  const double r_max = lad.radius(m - 1);
  const double h_max = lad.half_height(m - 1);

  // pattern points able to cover any part of C_m(p) at any scale
  std::vector<STPoint> nbrs;
  for (const STPoint& q : pattern.points()) {
    if (std::abs(q.t - p.t) > 2.0 * h_max) continue;
    const double dx = q.x - p.x, dy = q.y - p.y;
    if (dx * dx + dy * dy <= 4.0 * r_max * r_max) nbrs.push_back(q);
  }

  // prefix sums of eta for contributions sum_{i in [k, i0)} eta_i
  std::vector<double> prefix(static_cast<std::size_t>(m) + 1, 0.0);
  for (int j = 0; j < m; ++j)
    prefix[static_cast<std::size_t>(j) + 1] =
        prefix[static_cast<std::size_t>(j)] + spec.params.eta[static_cast<std::size_t>(j)];

  const VolumeGrid g = cylinder_grid(lad.cylinder(p, m - 1), spec.resolution);
  const Rect wb = spec.window.spatial.bounding_box();
  const bool poly = !spec.window.spatial.is_rectangle();

  // smallest scale whose cylinder around a displaced center covers (dxy, dt)
  const auto min_covering_scale = [&](double dxy2, double dt) {
    int j = 0;
    while (j < m && (dxy2 > lad.radius(j) * lad.radius(j) || dt > lad.half_height(j))) ++j;
    return j;  // m means never covered
  };

  double energy = 0.0;
  for (int it = 0; it < g.nt; ++it) {
    const double mt = g.t0 + (it + 0.5) * g.dt;
    if (mt < spec.window.tmin || mt > spec.window.tmax) continue;
    const double dtp = std::abs(mt - p.t);
    for (int iy = 0; iy < g.ny; ++iy) {
      const double my = g.y0 + (iy + 0.5) * g.dy;
      if (my < wb.ymin || my > wb.ymax) continue;
      for (int ix = 0; ix < g.nx; ++ix) {
        const double mx = g.x0 + (ix + 0.5) * g.dx;
        if (mx < wb.xmin || mx > wb.xmax) continue;
        const double dxp = mx - p.x, dyp = my - p.y;
        const int shell = min_covering_scale(dxp * dxp + dyp * dyp, dtp);
        if (shell >= m) continue;  // outside C_m(p)
        if (poly && !spec.window.spatial.contains(mx, my)) continue;
        // first scale at which the pattern covers this cell (monotone in scale)
        int covered_at = m;
        for (const STPoint& q : nbrs) {
          const double dxq = mx - q.x, dyq = my - q.y;
          const int cq = min_covering_scale(dxq * dxq + dyq * dyq, std::abs(mt - q.t));
          if (cq < covered_at) covered_at = cq;
          if (covered_at <= shell) break;
        }
        if (covered_at > shell)
          energy += prefix[static_cast<std::size_t>(covered_at)] -
                    prefix[static_cast<std::size_t>(shell)];
      }
    }
  }
  return std::log(lambda) - energy * g.cell_volume();
}

double log_density_ratio(const PointPattern& pattern, const STPoint& add,
                         const ModelSpec& spec) {
  return log_papangelou(add, pattern, spec);
}

double log_unnormalized_density(const PointPattern& pattern, const ModelSpec& spec) {
  if (pattern.empty()) return 0.0;
  double acc = 0.0;
  for (const STPoint& p : pattern.points()) {
    const double lambda = spec.intensity(p);
    if (!(lambda > 0.0)) return kNegInf;
    acc += std::log(lambda);
  }
  for (int j = 0; j < spec.params.size(); ++j) {
    const double eta = spec.params.eta[static_cast<std::size_t>(j)];
    if (eta == 0.0) continue;
    acc -= eta * union_cylinder_volume(pattern.points(), spec.params.ladder.radius(j),
                                       spec.params.ladder.half_height(j), spec.window,
                                       spec.resolution);
  }
  return acc;
}

}  // namespace stai
