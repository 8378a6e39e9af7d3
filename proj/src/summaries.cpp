#include "stai/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace stai {

namespace {
constexpr long kMaxRetries = 1000000;
}

PointPattern jitter(const PointPattern& pattern, double max_spatial, TemporalJitter mode,
                    const Window& w, Rng& rng) {
  if (max_spatial < 0.0) throw std::invalid_argument("jitter: max_spatial must be >= 0");
  std::vector<STPoint> pts(pattern.points().begin(), pattern.points().end());

  // members of spatially duplicated groups get displaced
  std::vector<bool> displace(pts.size(), false);
  {
    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < pts.size(); ++i) groups[{pts[i].x, pts[i].y}].push_back(i);
    for (const auto& [xy, members] : groups)
      if (members.size() > 1)
        for (std::size_t i : members) displace[i] = true;
  }

  const auto propose = [&](std::size_t i) {
    STPoint p = pattern[static_cast<int>(i)];
    if (displace[i] && max_spatial > 0.0) {
      const double rho = max_spatial * std::sqrt(rng.uniform());
      const double phi = 2.0 * M_PI * rng.uniform();
      p.x += rho * std::cos(phi);
      p.y += rho * std::sin(phi);
    }
    if (mode == TemporalJitter::uniform_within_week) {
      const double week = std::floor(pattern[static_cast<int>(i)].t);
      p.t = week + rng.uniform();
    }
    return p;
  };

  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!displace[i] && mode == TemporalJitter::none) continue;
    long tries = 0;
    for (;;) {
      if (++tries > kMaxRetries) throw std::runtime_error("jitter: retries exhausted");
      const STPoint p = propose(i);
      if (!w.contains(p)) continue;
      bool clash = false;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j != i && same_point(pts[j], p)) {
          clash = true;
          break;
        }
      }
      if (!clash) {
        pts[i] = p;
        break;
      }
    }
  }
  return PointPattern(std::move(pts), w);
}

double stoyan_bandwidth(int n, double area) {
  if (n < 1 || !(area > 0.0)) throw std::invalid_argument("stoyan rule: need n >= 1, area > 0");
  return 0.15 / std::sqrt(n / area);
}

namespace {

/// Set covariance |W intersect (W + v)| for translation correction.
/// Rectangles are analytic; polygons use a rasterized lookup built once.
class SetCovariance {
 public:
  SetCovariance(const SpatialWindow& w, double max_shift) : window_(w) {
    if (w.is_rectangle()) return;
    const Rect b = w.bounding_box();
    cell_ = std::max(b.width(), b.height()) / 128.0;
    nx_ = static_cast<int>(std::ceil(b.width() / cell_));
    ny_ = static_cast<int>(std::ceil(b.height() / cell_));
    mask_.assign(static_cast<std::size_t>(nx_) * ny_, 0);
    for (int iy = 0; iy < ny_; ++iy)
      for (int ix = 0; ix < nx_; ++ix)
        mask_[static_cast<std::size_t>(iy) * nx_ + ix] =
            w.contains(b.xmin + (ix + 0.5) * cell_, b.ymin + (iy + 0.5) * cell_) ? 1 : 0;
    shift_ = static_cast<int>(std::ceil(max_shift / cell_)) + 1;
    const int span = 2 * shift_ + 1;
    table_.assign(static_cast<std::size_t>(span) * span, 0.0);
    for (int sy = -shift_; sy <= shift_; ++sy)
      for (int sx = -shift_; sx <= shift_; ++sx) {
        long hits = 0;
        for (int iy = std::max(0, -sy); iy < std::min(ny_, ny_ - sy); ++iy)
          for (int ix = std::max(0, -sx); ix < std::min(nx_, nx_ - sx); ++ix)
            hits += mask_[static_cast<std::size_t>(iy) * nx_ + ix] &
                    mask_[static_cast<std::size_t>(iy + sy) * nx_ + (ix + sx)];
        table_[static_cast<std::size_t>(sy + shift_) * span + (sx + shift_)] =
            static_cast<double>(hits) * cell_ * cell_;
      }
  }

  double operator()(double vx, double vy) const {
    if (window_.is_rectangle()) {
      const Rect& b = window_.rect();
      const double ox = b.width() - std::abs(vx);
      const double oy = b.height() - std::abs(vy);
      return (ox > 0.0 && oy > 0.0) ? ox * oy : 0.0;
    }
    // bilinear lookup in shift units
    const int span = 2 * shift_ + 1;
    const double ux = vx / cell_ + shift_;
    const double uy = vy / cell_ + shift_;
    const int ix = std::clamp(static_cast<int>(std::floor(ux)), 0, span - 2);
    const int iy = std::clamp(static_cast<int>(std::floor(uy)), 0, span - 2);
    const double fx = std::clamp(ux - ix, 0.0, 1.0);
    const double fy = std::clamp(uy - iy, 0.0, 1.0);
    const auto at = [&](int i, int j) {
      return table_[static_cast<std::size_t>(j) * span + i];
    };
    return (1 - fx) * (1 - fy) * at(ix, iy) + fx * (1 - fy) * at(ix + 1, iy) +
           (1 - fx) * fy * at(ix, iy + 1) + fx * fy * at(ix + 1, iy + 1);
  }

 private:
  const SpatialWindow& window_;
  double cell_{0.0};
  int nx_{0}, ny_{0}, shift_{0};
  std::vector<int> mask_;
  std::vector<double> table_;
};

}  // namespace

PcfEstimate pcf(std::span<const Point2> points, const SpatialWindow& window, double bandwidth,
                std::span<const double> r_grid) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw std::invalid_argument("pcf: need at least 2 points");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("pcf: bandwidth must be positive");
  const double area = window.area();
  if (!(area > 0.0)) throw std::invalid_argument("pcf: degenerate window");

  double r_max = 0.0;
  for (double r : r_grid) r_max = std::max(r_max, r);
  const double reach = r_max + bandwidth;
  const SetCovariance covariance(window, reach);

  const double lambda2 = (n / area) * (n / area);
  PcfEstimate est;
  est.r.assign(r_grid.begin(), r_grid.end());
  est.g.assign(r_grid.size(), 0.0);
  est.bandwidth = bandwidth;

  // ordered pairs, Epanechnikov kernel in the pair distance
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double vx = points[static_cast<std::size_t>(j)].x - points[static_cast<std::size_t>(i)].x;
      const double vy = points[static_cast<std::size_t>(j)].y - points[static_cast<std::size_t>(i)].y;
      const double dist = std::sqrt(vx * vx + vy * vy);
      if (dist > reach) continue;
      const double cov = covariance(vx, vy);
      if (!(cov > 0.0)) continue;
      for (std::size_t k = 0; k < est.r.size(); ++k) {
        const double u = (est.r[k] - dist) / bandwidth;
        if (std::abs(u) >= 1.0) continue;
        const double kern = 0.75 * (1.0 - u * u) / bandwidth;
        est.g[k] += kern / (2.0 * M_PI * est.r[k] * lambda2 * cov);
      }
    }
  }
  return est;
}

AcfEstimate acf(std::span<const double> series, int max_lag) {
  const int t = static_cast<int>(series.size());
  if (t < 2) throw std::invalid_argument("acf: need at least 2 observations");
  if (max_lag < 0 || max_lag >= t) throw std::invalid_argument("acf: max_lag must be in [0, T)");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= t;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  if (var == 0.0) throw std::invalid_argument("acf: constant series");

  AcfEstimate est;
  est.conf_band = 1.96 / std::sqrt(static_cast<double>(t));
  est.acf.resize(static_cast<std::size_t>(max_lag) + 1);
  for (int k = 0; k <= max_lag; ++k) {
    double cov = 0.0;
    for (int i = 0; i + k < t; ++i)
      cov += (series[static_cast<std::size_t>(i)] - mean) *
             (series[static_cast<std::size_t>(i + k)] - mean);
    est.acf[static_cast<std::size_t>(k)] = cov / var;
  }
  return est;
}

RangeReport range_report(const PcfEstimate& pcf_est, const AcfEstimate& acf_est,
                         double pcf_band) {
  RangeReport rep;
  // first grid distance from which g stays within the band around 1
  std::size_t start = pcf_est.r.size();
  for (std::size_t k = pcf_est.r.size(); k-- > 0;) {
    if (std::abs(pcf_est.g[k] - 1.0) > pcf_band) break;
    start = k;
  }
  rep.pcf_flat_from = start < pcf_est.r.size() ? pcf_est.r[start]
                                               : (pcf_est.r.empty() ? 0.0 : pcf_est.r.back());
  rep.suggested_r_max = 0.5 * rep.pcf_flat_from;

  int last = 0;
  for (std::size_t k = 1; k < acf_est.acf.size(); ++k)
    if (std::abs(acf_est.acf[k]) > acf_est.conf_band) last = static_cast<int>(k);
  rep.acf_significant_lag = last;
  rep.suggested_t_max = 0.5 * last;
  return rep;
}

}  // namespace stai
