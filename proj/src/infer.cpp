#include "stai/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stai/parallel.hpp"

namespace stai {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ975 = 1.959963984540054;  // 97.5% normal quantile
}  // namespace

QuadratureScheme build_quadrature(const PointPattern& pattern, const Window& w,
                                  std::array<int, 3> n_cells, const ScaleLadder& ladder,
                                  GridResolution res) {
  const auto [ncx, ncy, nct] = n_cells;
  if (ncx < 1 || ncy < 1 || nct < 1)
    throw std::invalid_argument("quadrature: cell counts must be positive");

  const Rect b = w.spatial.bounding_box();
  const double dx = b.width() / ncx;
  const double dy = b.height() / ncy;
  const double dt = (w.tmax - w.tmin) / nct;
  const double cell_volume = dx * dy * dt;
  const bool poly = !w.spatial.is_rectangle();

  const auto cell_of = [&](const STPoint& p) {
    const int ix = std::clamp(static_cast<int>((p.x - b.xmin) / dx), 0, ncx - 1);
    const int iy = std::clamp(static_cast<int>((p.y - b.ymin) / dy), 0, ncy - 1);
    const int it = std::clamp(static_cast<int>((p.t - w.tmin) / dt), 0, nct - 1);
    return (static_cast<std::size_t>(it) * ncy + iy) * ncx + ix;
  };

  // clipped volume of one cell on a 4x4x4 midpoint subgrid (polygons only)
  const auto clipped_cell_volume = [&](int ix, int iy) {
    int inside = 0;
    for (int sy = 0; sy < 4; ++sy) {
      const double py = b.ymin + (iy + (sy + 0.5) / 4.0) * dy;
      for (int sx = 0; sx < 4; ++sx) {
        const double px = b.xmin + (ix + (sx + 0.5) / 4.0) * dx;
        if (w.spatial.contains(px, py)) inside += 4;  // all 4 t-slabs lie inside
      }
    }
    return cell_volume * inside / 64.0;
  };

  QuadratureScheme scheme{.points = {},
                          .z = {},
                          .w = {},
                          .y = {},
                          .S = {},
                          .ladder = ladder,
                          .cells = n_cells,
                          .n_data = pattern.size(),
                          .n_dummy = 0};
  scheme.points.assign(pattern.points().begin(), pattern.points().end());
  for (int it = 0; it < nct; ++it)
    for (int iy = 0; iy < ncy; ++iy)
      for (int ix = 0; ix < ncx; ++ix) {
        const STPoint center{b.xmin + (ix + 0.5) * dx, b.ymin + (iy + 0.5) * dy,
                             w.tmin + (it + 0.5) * dt};
        if (poly && !w.spatial.contains(center.x, center.y)) continue;
        scheme.points.push_back(center);
      }
  scheme.n_dummy = scheme.size() - scheme.n_data;
  if (scheme.size() == 0) throw std::invalid_argument("quadrature: no data or dummy points");

  // counting weights: cell volume over occupancy (data + dummy)
  std::vector<int> occupancy(static_cast<std::size_t>(ncx) * ncy * nct, 0);
  std::vector<std::size_t> cell_index(static_cast<std::size_t>(scheme.size()));
  for (int i = 0; i < scheme.size(); ++i) {
    cell_index[static_cast<std::size_t>(i)] = cell_of(scheme.points[static_cast<std::size_t>(i)]);
    ++occupancy[cell_index[static_cast<std::size_t>(i)]];
  }
  std::vector<double> volumes;
  if (poly) {
    volumes.assign(static_cast<std::size_t>(ncx) * ncy * nct, 0.0);
    for (int it = 0; it < nct; ++it)
      for (int iy = 0; iy < ncy; ++iy)
        for (int ix = 0; ix < ncx; ++ix) {
          const std::size_t k = (static_cast<std::size_t>(it) * ncy + iy) * ncx + ix;
          if (occupancy[k] > 0) volumes[k] = clipped_cell_volume(ix, iy);
        }
  }
  scheme.w.resize(static_cast<std::size_t>(scheme.size()));
  scheme.y.resize(static_cast<std::size_t>(scheme.size()));
  scheme.z.resize(static_cast<std::size_t>(scheme.size()));
  for (int i = 0; i < scheme.size(); ++i) {
    const std::size_t k = cell_index[static_cast<std::size_t>(i)];
    const double v = poly ? volumes[k] : cell_volume;
    scheme.z[static_cast<std::size_t>(i)] = i < scheme.n_data ? 1 : 0;
    scheme.w[static_cast<std::size_t>(i)] = v / occupancy[k];
    scheme.y[static_cast<std::size_t>(i)] =
        scheme.z[static_cast<std::size_t>(i)] / scheme.w[static_cast<std::size_t>(i)];
  }

  // sufficient statistics; data rows exclude the point itself from the union
  const int m = ladder.size();
  scheme.S.resize(scheme.size(), m);
  const BinIndex index(pattern.points(), w, ladder.radius(m - 1), ladder.half_height(m - 1));
  const ModelSpec stats_spec(InteractionParams(std::vector<double>(static_cast<std::size_t>(m), 0.0),
                                               ladder),
                             IntensitySurface::constant(1.0), w, res);
  parallel_for(scheme.size(), [&](int i) {
    thread_local std::vector<int> candidates;
    const STPoint& p = scheme.points[static_cast<std::size_t>(i)];
    index.query(p, 2.0 * ladder.radius(m - 1), 2.0 * ladder.half_height(m - 1), candidates);
    const int self = i < scheme.n_data ? i : -1;
    const SuffStats s =
        detail::suff_stats_span(p, pattern.points(), self, stats_spec, &candidates);
    for (int j = 0; j < m; ++j) scheme.S(i, j) = s.s[static_cast<std::size_t>(j)];
  });
  return scheme;
}

double log_pseudolikelihood(const QuadratureScheme& scheme, std::span<const double> offset,
                            std::span<const double> eta) {
  if (static_cast<int>(offset.size()) != scheme.size())
    throw std::invalid_argument("log PL: offset length must match the scheme");
  if (static_cast<int>(eta.size()) != scheme.ladder.size())
    throw std::invalid_argument("log PL: eta length must match the ladder");
  double acc = 0.0;
  for (int i = 0; i < scheme.size(); ++i) {
    double log_lambda = offset[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < eta.size(); ++k)
      log_lambda -= eta[k] * scheme.S(i, static_cast<int>(k));
    const double wi = scheme.w[static_cast<std::size_t>(i)];
    const double yi = scheme.y[static_cast<std::size_t>(i)];
    if (yi > 0.0) {
      if (log_lambda == kNegInf) return kNegInf;
      acc += wi * yi * log_lambda;
    }
    acc -= wi * std::exp(log_lambda);
  }
  return acc;
}

namespace {

struct DesignData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y, w, off;
  std::vector<int> rows;  // scheme row per design row
};

DesignData assemble_design(const QuadratureScheme& scheme, std::span<const double> offset,
                           bool intercept) {
  const int m = scheme.ladder.size();
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(scheme.size()));
  for (int i = 0; i < scheme.size(); ++i) {
    const double off = offset[static_cast<std::size_t>(i)];
    if (off == kNegInf) {
      if (scheme.z[static_cast<std::size_t>(i)] == 1)
        throw std::runtime_error("fit: data point " + std::to_string(i) +
                                 " has zero intensity (log offset is -inf)");
      continue;  // dummy with zero intensity contributes nothing
    }
    keep.push_back(i);
  }
  const int n = static_cast<int>(keep.size());
  const int p = (intercept ? 1 : 0) + m;
  if (n < p) throw std::runtime_error("fit: fewer usable quadrature rows than coefficients");

  DesignData d;
  d.X.resize(n, p);
  d.y.resize(n);
  d.w.resize(n);
  d.off.resize(n);
  d.rows = keep;
  for (int r = 0; r < n; ++r) {
    const int i = keep[static_cast<std::size_t>(r)];
    int col = 0;
    if (intercept) d.X(r, col++) = 1.0;
    for (int k = 0; k < m; ++k)
      d.X(r, col + k) = -scheme.S(i, k) / scheme.ladder.cylinder_volume(k);
    d.y(r) = scheme.y[static_cast<std::size_t>(i)];
    d.w(r) = scheme.w[static_cast<std::size_t>(i)];
    d.off(r) = offset[static_cast<std::size_t>(i)];
  }
  return d;
}

}  // namespace

std::vector<double> FitResult::eta() const {
  std::vector<double> out(theta_scaled.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = theta_scaled[j] / ladder.cylinder_volume(static_cast<int>(j));
  return out;
}

FitResult fit_mple(const QuadratureScheme& scheme, std::span<const double> offset,
                   const FitOptions& options) {
  if (static_cast<int>(offset.size()) != scheme.size())
    throw std::invalid_argument("fit: offset length must match the scheme");
  const int m = scheme.ladder.size();

  // a scale whose statistics vanish everywhere cannot be identified
  for (int k = 0; k < m; ++k) {
    if (scheme.S.col(k).cwiseAbs().maxCoeff() == 0.0)
      throw std::runtime_error("fit: rank deficiency, sufficient statistic is identically 0 at "
                               "scale (r=" +
                               std::to_string(scheme.ladder.radius(k)) +
                               ", t=" + std::to_string(scheme.ladder.half_height(k)) + ")");
  }

  DesignData d = assemble_design(scheme, offset, options.include_intercept);
  const int n = static_cast<int>(d.y.size());
  const int p = static_cast<int>(d.X.cols());

  // working linear predictor initialized from the responses (mu = y + 0.1),
  // which keeps the first weighted solve at a sane magnitude
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta_lin = (d.y.array() + 0.1).log();
  Eigen::VectorXd mu(n);
  double deviance = std::numeric_limits<double>::infinity();
  bool converged = false;
  int used_iterations = 0;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    used_iterations = iter;
    mu = eta_lin.array().min(700.0).max(-700.0).exp();

    const Eigen::VectorXd irls_w = d.w.array() * mu.array();
    const Eigen::VectorXd working =
        (eta_lin - d.off).array() + (d.y - mu).array() / mu.array();
    const Eigen::MatrixXd xtwx = d.X.transpose() * irls_w.asDiagonal() * d.X;
    const Eigen::VectorXd xtwz = d.X.transpose() * (irls_w.array() * working.array()).matrix();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtwx);
    if (lu.rank() < p) throw std::runtime_error("fit: rank-deficient design matrix");
    beta = lu.solve(xtwz);

    eta_lin = d.off + d.X * beta;
    mu = eta_lin.array().min(700.0).max(-700.0).exp();
    double dev = 0.0;
    for (int i = 0; i < n; ++i) {
      if (d.y(i) > 0.0) dev += d.w(i) * d.y(i) * (std::log(d.y(i)) - std::log(mu(i)));
      dev -= d.w(i) * (d.y(i) - mu(i));
    }
    dev *= 2.0;
    if (std::isfinite(dev) &&
        std::abs(dev - deviance) < options.deviance_tol * (std::abs(dev) + 0.1)) {
      deviance = dev;
      converged = true;
      break;
    }
    deviance = dev;
  }

  FitResult out;
  out.ladder = scheme.ladder;
  out.has_intercept = options.include_intercept;
  out.converged = converged;
  out.iterations = used_iterations;

  const Eigen::MatrixXd fisher =
      d.X.transpose() * (d.w.array() * mu.array()).matrix().asDiagonal() * d.X;
  out.fisher_information = fisher;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fisher);
  if (lu.rank() < p) throw std::runtime_error("fit: singular Fisher information");
  const Eigen::MatrixXd cov = lu.inverse();

  int col = 0;
  if (options.include_intercept) {
    const double se = std::sqrt(std::max(0.0, cov(0, 0)));
    out.intercept = beta(0);
    out.intercept_ci_low = beta(0) - kZ975 * se;
    out.intercept_ci_high = beta(0) + kZ975 * se;
    col = 1;
  }
  out.theta_scaled.resize(static_cast<std::size_t>(m));
  out.theta_ci_low.resize(static_cast<std::size_t>(m));
  out.theta_ci_high.resize(static_cast<std::size_t>(m));
  out.gamma.resize(static_cast<std::size_t>(m));
  out.gamma_ci_low.resize(static_cast<std::size_t>(m));
  out.gamma_ci_high.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double se = std::sqrt(std::max(0.0, cov(col + k, col + k)));
    const double vol = scheme.ladder.cylinder_volume(k);
    const auto kk = static_cast<std::size_t>(k);
    out.theta_scaled[kk] = beta(col + k);
    out.theta_ci_low[kk] = beta(col + k) - kZ975 * se;
    out.theta_ci_high[kk] = beta(col + k) + kZ975 * se;
    out.gamma[kk] = std::exp(out.theta_scaled[kk] / vol);
    out.gamma_ci_low[kk] = std::exp(out.theta_ci_low[kk] / vol);
    out.gamma_ci_high[kk] = std::exp(out.theta_ci_high[kk] / vol);
  }

  // score at the optimum: intercept component plus eta-scale components
  const Eigen::VectorXd resid = (d.w.array() * (d.y - mu).array()).matrix();
  double score = 0.0;
  {
    const Eigen::VectorXd grad = d.X.transpose() * resid;
    int c = 0;
    if (options.include_intercept) score = std::abs(grad(c++));
    for (int k = 0; k < m; ++k)
      score = std::max(score, std::abs(grad(c + k)) * scheme.ladder.cylinder_volume(k));
  }
  out.score_max_norm = score;

  // maximized approximate log PL over the full scheme
  {
    const std::vector<double> eta_hat = out.eta();
    if (options.include_intercept) {
      // the intercept shifts every finite offset
      std::vector<double> shifted(offset.begin(), offset.end());
      for (double& o : shifted)
        if (o != kNegInf) o += out.intercept;
      out.log_pl = log_pseudolikelihood(scheme, shifted, eta_hat);
    } else {
      out.log_pl = log_pseudolikelihood(scheme, offset, eta_hat);
    }
  }
  return out;
}

ProfileResult profile_scales(const PointPattern& pattern, const Window& w,
                             std::span<const ScaleLadder> candidates,
                             const IntensitySurface& intensity, std::array<int, 3> n_cells,
                             GridResolution res, const FitOptions& options) {
  if (candidates.empty()) throw std::invalid_argument("profile: empty candidate list");
  ProfileResult result;
  std::vector<double> offset;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    try {
      QuadratureScheme scheme = build_quadrature(pattern, w, n_cells, candidates[c], res);
      if (offset.empty()) {
        offset.resize(static_cast<std::size_t>(scheme.size()));
        for (int i = 0; i < scheme.size(); ++i) {
          const double lambda = intensity(scheme.points[static_cast<std::size_t>(i)]);
          offset[static_cast<std::size_t>(i)] = lambda > 0.0 ? std::log(lambda) : kNegInf;
        }
      }
      FitResult fit = fit_mple(scheme, offset, options);
      if (!fit.converged) {
        result.warnings.push_back("candidate " + std::to_string(c) + ": IRLS did not converge");
        continue;
      }
      result.ranked.push_back({candidates[c], fit.log_pl, std::move(fit)});
    } catch (const std::exception& e) {
      result.warnings.push_back("candidate " + std::to_string(c) + ": " + e.what());
    }
  }
  std::sort(result.ranked.begin(), result.ranked.end(),
            [](const ProfileEntry& a, const ProfileEntry& b) {
              if (a.log_pl != b.log_pl) return a.log_pl > b.log_pl;
              if (a.ladder.size() != b.ladder.size()) return a.ladder.size() < b.ladder.size();
              for (int j = 0; j < a.ladder.size(); ++j) {
                if (a.ladder.radius(j) != b.ladder.radius(j))
                  return a.ladder.radius(j) < b.ladder.radius(j);
                if (a.ladder.half_height(j) != b.ladder.half_height(j))
                  return a.ladder.half_height(j) < b.ladder.half_height(j);
              }
              return false;
            });
  return result;
}

}  // namespace stai
