#include "stai/intensity.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stai {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kInvSqrt2 = 0.7071067811865475244;
}  // namespace

KdeSurface::KdeSurface(std::vector<Point2> sample, double bandwidth, SpatialWindow window,
                       bool edge_correction)
    : sample_(std::move(sample)),
      bandwidth_(bandwidth),
      window_(std::move(window)),
      edge_correction_(edge_correction) {
  if (sample_.empty()) throw std::invalid_argument("kde: empty sample");
  if (!(bandwidth_ > 0.0)) throw std::invalid_argument("kde: bandwidth must be positive");
}

double KdeSurface::correction_mass(double x, double y) const {
  if (window_.is_rectangle()) {
    const Rect& b = window_.rect();
    const double s = kInvSqrt2 / bandwidth_;
    const double mx = 0.5 * (std::erf((b.xmax - x) * s) - std::erf((b.xmin - x) * s));
    const double my = 0.5 * (std::erf((b.ymax - y) * s) - std::erf((b.ymin - y) * s));
    return mx * my;
  }
  // polygon: midpoint quadrature of the kernel over +-5 bandwidths
  const int n = 33;
  const double half = 5.0 * bandwidth_;
  const double step = 2.0 * half / n;
  const double norm = 1.0 / (kTwoPi * bandwidth_ * bandwidth_);
  double mass = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double py = y - half + (iy + 0.5) * step;
    for (int ix = 0; ix < n; ++ix) {
      const double px = x - half + (ix + 0.5) * step;
      if (!window_.contains(px, py)) continue;
      const double d2 = (px - x) * (px - x) + (py - y) * (py - y);
      mass += std::exp(-0.5 * d2 / (bandwidth_ * bandwidth_)) * norm;
    }
  }
  return mass * step * step;
}

double KdeSurface::operator()(double x, double y) const {
  const double inv2b2 = 0.5 / (bandwidth_ * bandwidth_);
  const double norm = 1.0 / (kTwoPi * bandwidth_ * bandwidth_);
  double acc = 0.0;
  for (const Point2& p : sample_) {
    const double dx = x - p.x, dy = y - p.y;
    acc += std::exp(-(dx * dx + dy * dy) * inv2b2);
  }
  double value = acc * norm;
  if (edge_correction_) {
    const double mass = correction_mass(x, y);
    if (mass > 1e-12) value /= mass;
  }
  return value;
}

double KdeSurface::sup_over(const Rect& box) const {
  const int n = 128;
  double best = 0.0;
  for (int iy = 0; iy <= n; ++iy) {
    const double y = box.ymin + (box.ymax - box.ymin) * iy / n;
    for (int ix = 0; ix <= n; ++ix) {
      const double x = box.xmin + (box.xmax - box.xmin) * ix / n;
      best = std::max(best, (*this)(x, y));
    }
  }
  return best * 1.25;
}

KdeSurface fit_kde(std::vector<Point2> sample, double bandwidth, SpatialWindow window,
                   bool edge_correction) {
  return KdeSurface(std::move(sample), bandwidth, std::move(window), edge_correction);
}

double scott_bandwidth(std::span<const Point2> sample) {
  if (sample.size() < 2) throw std::invalid_argument("scott rule needs n >= 2");
  double mx = 0.0, my = 0.0;
  for (const Point2& p : sample) {
    mx += p.x;
    my += p.y;
  }
  const double n = static_cast<double>(sample.size());
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (const Point2& p : sample) {
    vx += (p.x - mx) * (p.x - mx);
    vy += (p.y - my) * (p.y - my);
  }
  const double sigma = std::sqrt(0.5 * (vx + vy) / (n - 1.0));
  return sigma * std::pow(n, -1.0 / 6.0);
}

double HarmonicCurve::operator()(double t) const {
  double v = c0 + e1 + e2 * t;
  for (int j = 0; j < 3; ++j) {
    const double a = kTwoPi * (j + 1) * t / period;
    v += c[static_cast<std::size_t>(j)] * std::cos(a) + d[static_cast<std::size_t>(j)] * std::sin(a);
  }
  return v;
}

HarmonicFit fit_harmonic(std::span<const std::pair<double, double>> counts) {
  const int n = static_cast<int>(counts.size());
  if (n < 9) throw std::invalid_argument("harmonic fit needs at least 9 observations");
  const int p = 8;  // intercept, 3 cos, 3 sin, trend
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double t = counts[static_cast<std::size_t>(i)].first;
    X(i, 0) = 1.0;
    for (int j = 1; j <= 3; ++j) {
      const double a = kTwoPi * j * t / 52.0;
      X(i, j) = std::cos(a);
      X(i, 3 + j) = std::sin(a);
    }
    X(i, 7) = t;
    y(i) = counts[static_cast<std::size_t>(i)].second;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) throw std::runtime_error("harmonic fit: rank-deficient design");
  const Eigen::VectorXd beta = qr.solve(y);

  HarmonicFit fit;
  fit.curve.c0 = beta(0);
  for (int j = 0; j < 3; ++j) {
    fit.curve.c[static_cast<std::size_t>(j)] = beta(1 + j);
    fit.curve.d[static_cast<std::size_t>(j)] = beta(4 + j);
  }
  fit.curve.e1 = 0.0;  // constant term absorbed into c0
  fit.curve.e2 = beta(7);
  fit.n_obs = n;

  const Eigen::VectorXd resid = y - X * beta;
  const double rss = resid.squaredNorm();
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  fit.residual_sd = n > p ? std::sqrt(rss / (n - p)) : 0.0;
  return fit;
}

double GridSurface::operator()(double x, double y, double t) const {
  const auto locate = [](double v, double lo, double hi, int n) {
    const double u = (v - lo) / (hi - lo) * (n - 1);
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, n - 2);
    double f = u - i;
    f = std::clamp(f, 0.0, 1.0);
    return std::pair<int, double>(i, f);
  };
  const auto [ix, fx] = locate(x, box.xmin, box.xmax, nx);
  const auto [iy, fy] = locate(y, box.ymin, box.ymax, ny);
  const auto [it, ft] = locate(t, tmin, tmax, nt);
  const auto at = [this](int i, int j, int k) {
    return values[(static_cast<std::size_t>(k) * ny + j) * nx + i];
  };
  double acc = 0.0;
  for (int dk = 0; dk <= 1; ++dk)
    for (int dj = 0; dj <= 1; ++dj)
      for (int di = 0; di <= 1; ++di) {
        const double wgt = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) * (dk ? ft : 1.0 - ft);
        acc += wgt * at(ix + di, iy + dj, it + dk);
      }
  return acc;
}

double GridSurface::max_value() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

IntensitySurface IntensitySurface::constant(double value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::invalid_argument("constant intensity must be finite and >= 0");
  IntensitySurface s;
  s.v_ = Constant{value};
  return s;
}

IntensitySurface IntensitySurface::product(KdeSurface spatial, HarmonicCurve temporal,
                                           double rescale) {
  if (!(rescale > 0.0)) throw std::invalid_argument("product intensity: rescale must be > 0");
  IntensitySurface s;
  s.v_ = Product{std::move(spatial), std::move(temporal), rescale};
  return s;
}

IntensitySurface IntensitySurface::grid(GridSurface g) {
  const std::size_t need = static_cast<std::size_t>(g.nx) * g.ny * g.nt;
  if (g.nx < 2 || g.ny < 2 || g.nt < 2 || g.values.size() != need)
    throw std::invalid_argument("grid intensity: need >= 2 nodes per axis and matching values");
  for (double v : g.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("grid intensity: values must be finite and >= 0");
  IntensitySurface s;
  s.v_ = std::move(g);
  return s;
}

double IntensitySurface::operator()(const STPoint& p) const {
  if (is_constant()) return as_constant().value;
  if (is_product()) {
    const Product& pr = as_product();
    return pr.spatial(p.x, p.y) * pr.temporal.clamped(p.t) / pr.rescale;
  }
  return as_grid()(p.x, p.y, p.t);
}

double IntensitySurface::upper_bound(const Window& w) const {
  if (is_constant()) return as_constant().value;
  if (is_grid()) return as_grid().max_value();  // trilinear never exceeds node max
  const Product& pr = as_product();
  // temporal sup over a fine 1-D grid; the curve is smooth and low-order
  double zmax = 0.0;
  for (int i = 0; i <= 4096; ++i)
    zmax = std::max(zmax, pr.temporal.clamped(w.tmin + (w.tmax - w.tmin) * i / 4096.0));
  return pr.spatial.sup_over(w.spatial.bounding_box()) * zmax / pr.rescale;
}

double integrate_intensity(const IntensitySurface& s, const Window& w, int cells_per_axis) {
  const int n = std::max(2, cells_per_axis);
  const Rect b = w.spatial.bounding_box();
  const double dx = b.width() / n, dy = b.height() / n, dt = (w.tmax - w.tmin) / n;
  const bool poly = !w.spatial.is_rectangle();

  if (s.is_product()) {
    // lambda(x) Z(t) factorizes: one spatial pass and one temporal pass
    const auto& pr = s.as_product();
    double spatial = 0.0;
    for (int iy = 0; iy < n; ++iy) {
      const double y = b.ymin + (iy + 0.5) * dy;
      for (int ix = 0; ix < n; ++ix) {
        const double x = b.xmin + (ix + 0.5) * dx;
        if (poly && !w.spatial.contains(x, y)) continue;
        spatial += pr.spatial(x, y);
      }
    }
    spatial *= dx * dy;
    double temporal = 0.0;
    for (int it = 0; it < n; ++it)
      temporal += pr.temporal.clamped(w.tmin + (it + 0.5) * dt);
    temporal *= dt;
    return spatial * temporal / pr.rescale;
  }

  double acc = 0.0;
  for (int it = 0; it < n; ++it) {
    const double t = w.tmin + (it + 0.5) * dt;
    for (int iy = 0; iy < n; ++iy) {
      const double y = b.ymin + (iy + 0.5) * dy;
      for (int ix = 0; ix < n; ++ix) {
        const double x = b.xmin + (ix + 0.5) * dx;
        if (poly && !w.spatial.contains(x, y)) continue;
        acc += s({x, y, t});
      }
    }
  }
  return acc * dx * dy * dt;
}

std::vector<Point2> synthesize_population(std::span<const CensusSection> sections, Rng& rng) {
  std::vector<Point2> out;
  for (const CensusSection& sec : sections) {
    const Rect b = sec.region.bounding_box();
    for (long k = 0; k < sec.count; ++k) {
      for (long tries = 0;; ++tries) {
        if (tries >= 1000000)
          throw std::runtime_error("population synthesis: rejection sampling exhausted");
        const double x = rng.uniform(b.xmin, b.xmax);
        const double y = rng.uniform(b.ymin, b.ymax);
        if (sec.region.contains(x, y)) {
          out.push_back({x, y});
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace stai
