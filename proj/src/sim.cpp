#include "stai/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stai {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long kMaxRejectionRetries = 1000000;

/// Mutable chain state: point vector plus uniform buckets so each proposal
/// only scans the 27 bins within Markov range.
class ChainState {
 public:
  ChainState(const ModelSpec& spec, const PointPattern& initial, bool brute_force)
      : spec_(spec), brute_(brute_force) {
    const ScaleLadder& lad = spec.params.ladder;
    const Rect b = spec.window.spatial.bounding_box();
    x0_ = b.xmin;
    y0_ = b.ymin;
    t0_ = spec.window.tmin;
    cell_xy_ = 2.0 * lad.radius(lad.size() - 1);
    cell_t_ = 2.0 * lad.half_height(lad.size() - 1);
    nx_ = std::max(1, static_cast<int>(std::ceil(b.width() / cell_xy_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(b.height() / cell_xy_)));
    nt_ = std::max(1, static_cast<int>(std::ceil((spec.window.tmax - t0_) / cell_t_)));
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_ * nt_, {});
    for (const STPoint& p : initial.points()) birth(p);
  }

  int size() const { return static_cast<int>(pts_.size()); }
  const std::vector<STPoint>& points() const { return pts_; }
  const STPoint& point(int i) const { return pts_[static_cast<std::size_t>(i)]; }

  void birth(const STPoint& p) {
    pts_.push_back(p);
    buckets_[bucket_of(p)].push_back(static_cast<int>(pts_.size()) - 1);
  }

  void death(int i) {
    const int last = static_cast<int>(pts_.size()) - 1;
    erase_from_bucket(bucket_of(pts_[static_cast<std::size_t>(i)]), i);
    if (i != last) {
      relabel_in_bucket(bucket_of(pts_[static_cast<std::size_t>(last)]), last, i);
      pts_[static_cast<std::size_t>(i)] = pts_[static_cast<std::size_t>(last)];
    }
    pts_.pop_back();
  }

  bool contains_point(const STPoint& p) const {
    for (int idx : buckets_[bucket_of(p)])
      if (same_point(pts_[static_cast<std::size_t>(idx)], p)) return true;
    return false;
  }

  // log conditional intensity of p given the state minus point `skip`
  double log_papangelou(const STPoint& p, int skip = -1) {
    if (brute_) return detail::log_papangelou_span(p, pts_, skip, spec_, nullptr);
    gather_candidates(p);
    return detail::log_papangelou_span(p, pts_, skip, spec_, &scratch_);
  }

 private:
  std::size_t bucket_of(const STPoint& p) const {
    const int ix = std::clamp(static_cast<int>((p.x - x0_) / cell_xy_), 0, nx_ - 1);
    const int iy = std::clamp(static_cast<int>((p.y - y0_) / cell_xy_), 0, ny_ - 1);
    const int it = std::clamp(static_cast<int>((p.t - t0_) / cell_t_), 0, nt_ - 1);
    return (static_cast<std::size_t>(it) * ny_ + iy) * nx_ + ix;
  }

  void erase_from_bucket(std::size_t b, int idx) {
    auto& v = buckets_[b];
    v.erase(std::find(v.begin(), v.end(), idx));
  }

  void relabel_in_bucket(std::size_t b, int from, int to) {
    auto& v = buckets_[b];
    *std::find(v.begin(), v.end(), from) = to;
  }

  void gather_candidates(const STPoint& p) {
    scratch_.clear();
    const int ix0 = std::clamp(static_cast<int>((p.x - cell_xy_ - x0_) / cell_xy_), 0, nx_ - 1);
    const int ix1 = std::clamp(static_cast<int>((p.x + cell_xy_ - x0_) / cell_xy_), 0, nx_ - 1);
    const int iy0 = std::clamp(static_cast<int>((p.y - cell_xy_ - y0_) / cell_xy_), 0, ny_ - 1);
    const int iy1 = std::clamp(static_cast<int>((p.y + cell_xy_ - y0_) / cell_xy_), 0, ny_ - 1);
    const int it0 = std::clamp(static_cast<int>((p.t - cell_t_ - t0_) / cell_t_), 0, nt_ - 1);
    const int it1 = std::clamp(static_cast<int>((p.t + cell_t_ - t0_) / cell_t_), 0, nt_ - 1);
    for (int it = it0; it <= it1; ++it)
      for (int iy = iy0; iy <= iy1; ++iy)
        for (int ix = ix0; ix <= ix1; ++ix) {
          const auto& v = buckets_[(static_cast<std::size_t>(it) * ny_ + iy) * nx_ + ix];
          scratch_.insert(scratch_.end(), v.begin(), v.end());
        }
  }

  const ModelSpec& spec_;
  bool brute_;
  std::vector<STPoint> pts_;
  std::vector<std::vector<int>> buckets_;
  std::vector<int> scratch_;
  double x0_, y0_, t0_, cell_xy_, cell_t_;
  int nx_, ny_, nt_;
};

double initial_log_density(const ModelSpec& spec, const PointPattern& initial) {
  return initial.empty() ? 0.0 : log_unnormalized_density(initial, spec);
}

}  // namespace

STPoint uniform_window_point(const Window& w, Rng& rng) {
  const Rect b = w.spatial.bounding_box();
  for (long tries = 0; tries < kMaxRejectionRetries; ++tries) {
    STPoint p{rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax),
              rng.uniform(w.tmin, w.tmax)};
    if (w.spatial.contains(p.x, p.y)) return p;
  }
  throw std::runtime_error("uniform window sampling: rejection retries exhausted");
}

PointPattern sample_poisson(const IntensitySurface& intensity, const Window& w, Rng& rng) {
  const double bound = intensity.upper_bound(w);
  if (!std::isfinite(bound))
    throw std::invalid_argument("poisson sampling: intensity bound is not finite");
  std::vector<STPoint> pts;
  if (bound > 0.0) {
    const long n = rng.poisson(bound * w.volume());
    pts.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      const STPoint p = uniform_window_point(w, rng);
      const double lambda = intensity(p);
      if (lambda > bound)
        throw std::runtime_error("poisson sampling: intensity exceeded its upper bound");
      if (rng.uniform() * bound < lambda) pts.push_back(p);
    }
  }
  return PointPattern(std::move(pts), w);
}

double mh_ratio(const PointPattern& pattern, const STPoint& candidate, const ModelSpec& spec) {
  const double lp = log_papangelou(candidate, pattern, spec);
  if (lp == kNegInf) return 0.0;
  return spec.window.volume() / (pattern.size() + 1.0) * std::exp(lp);
}

std::pair<PointPattern, ChainTrace> run_mh(const ModelSpec& spec, const MhConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("mh: iterations must be >= 1");
  Rng rng(cfg.seed);
  ChainState state(spec, cfg.initial, cfg.brute_force_neighbors);
  ChainTrace trace;
  double log_dens = initial_log_density(spec, cfg.initial);
  const double log_volume = std::log(spec.window.volume());

  if (cfg.trace_every > 0)
    trace.rows.push_back({0, state.size(), log_dens, false, 0.0});

  for (long iter = 1; iter <= cfg.iterations; ++iter) {
    bool accepted = false;
    if (rng.uniform() < 0.5) {
      // birth
      const STPoint u = uniform_window_point(spec.window, rng);
      ++trace.proposals;
      if (!state.contains_point(u)) {
        const double lp = state.log_papangelou(u);
        const double log_r = log_volume - std::log(state.size() + 1.0) + lp;
        if (std::log(rng.uniform()) < log_r) {
          state.birth(u);
          log_dens += lp;
          accepted = true;
        }
      }
    } else if (state.size() > 0) {
      // death: acceptance min(1, 1/r) with r the ratio for re-adding the victim
      const int victim = static_cast<int>(rng.below(static_cast<std::uint64_t>(state.size())));
      ++trace.proposals;
      const STPoint v = state.point(victim);
      const double lp = state.log_papangelou(v, victim);
      const double log_r = log_volume - std::log(static_cast<double>(state.size())) + lp;
      if (std::log(rng.uniform()) < -log_r) {
        state.death(victim);
        log_dens -= lp;
        accepted = true;
      }
    }
    // a death proposed at the empty configuration is a consumed iteration

    if (accepted) ++trace.accepted;
    if (cfg.trace_every > 0 && iter % cfg.trace_every == 0)
      trace.rows.push_back({iter, state.size(), log_dens, accepted, 0.0});
  }
  return {PointPattern(state.points(), spec.window), std::move(trace)};
}

std::pair<PointPattern, ChainTrace> run_bd(const ModelSpec& spec, const BdConfig& cfg) {
  if (cfg.max_events <= 0 && cfg.time_budget <= 0.0)
    throw std::invalid_argument("bd: set max_events or time_budget");

  // constant envelope: inhibitory scales contribute their full cylinder
  // volume, attractive scales are bounded by one
  double log_w = std::log(spec.intensity_bound());
  for (int j = 0; j < spec.params.size(); ++j) {
    const double eta = spec.params.eta[static_cast<std::size_t>(j)];
    if (eta < 0.0) log_w -= eta * spec.params.ladder.cylinder_volume(j);
  }
  if (spec.intensity_bound() <= 0.0) log_w = kNegInf;
  const double big_g = (log_w == kNegInf) ? 0.0 : std::exp(log_w) * spec.window.volume();
  if (!std::isfinite(big_g))
    throw std::invalid_argument("bd: rejection envelope is not finite");

  Rng rng(cfg.seed);
  ChainState state(spec, cfg.initial, cfg.brute_force_neighbors);
  ChainTrace trace;
  double log_dens = initial_log_density(spec, cfg.initial);
  double total_time = 0.0;
  long jumps = 0;

  if (cfg.trace_every > 0)
    trace.rows.push_back({0, state.size(), log_dens, false, 0.0});

  while ((cfg.max_events <= 0 || jumps < cfg.max_events) &&
         (cfg.time_budget <= 0.0 || total_time < cfg.time_budget)) {
    const double death_rate = static_cast<double>(state.size());
    const double total_rate = death_rate + big_g;
    if (total_rate <= 0.0) break;  // absorbing: no births possible, no points left

    double sojourn = 0.0;
    bool moved = false;
    bool was_birth = false;
    STPoint born{};
    double born_lp = 0.0;
    int victim = -1;
    while (!moved) {
      sojourn += rng.exponential(total_rate);
      if (rng.uniform() < death_rate / total_rate) {
        victim = static_cast<int>(rng.below(static_cast<std::uint64_t>(state.size())));
        moved = true;
      } else {
        const STPoint u = uniform_window_point(spec.window, rng);
        ++trace.proposals;
        if (state.contains_point(u)) continue;
        const double lp = state.log_papangelou(u);
        if (lp > log_w + 1e-9)
          throw std::runtime_error("bd: conditional intensity exceeded the envelope");
        if (std::log(rng.uniform()) < lp - log_w) {
          born = u;
          born_lp = lp;
          was_birth = true;
          moved = true;
        }
        // rejected birth: repeat, accumulating sojourn time
      }
    }

    if (was_birth) {
      log_dens += born_lp;
      state.birth(born);
    } else {
      const STPoint v = state.point(victim);
      log_dens -= state.log_papangelou(v, victim);
      state.death(victim);
    }
    ++jumps;
    ++trace.accepted;
    total_time += sojourn;
    if (cfg.trace_every > 0 && jumps % cfg.trace_every == 0)
      trace.rows.push_back({jumps, state.size(), log_dens, true, sojourn});
  }
  return {PointPattern(state.points(), spec.window), std::move(trace)};
}

}  // namespace stai
