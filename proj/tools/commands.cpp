#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "stai/io.hpp"
#include "stai/parallel.hpp"

namespace stai::cli {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ValidationError("config." + path + ": " + message);
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path.empty() ? key : path + "." + key, "missing required field");
  return j.at(key);
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) fail(path.empty() ? key : path + "." + key, "expected a number");
  return v.get<double>();
}

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(path, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Window parse_window(const json& cfg) {
  const json& wj = require(cfg, "window", "");
  try {
    SpatialWindow spatial = [&]() {
      if (wj.contains("rect")) {
        const auto r = number_list(wj.at("rect"), "window.rect");
        if (r.size() != 4) fail("window.rect", "needs [xmin, xmax, ymin, ymax]");
        return SpatialWindow::rectangle(r[0], r[1], r[2], r[3]);
      }
      if (wj.contains("polygon")) {
        SpatialWindow::Ring ring;
        for (const auto& v : wj.at("polygon")) {
          const auto pt = number_list(v, "window.polygon");
          if (pt.size() != 2) fail("window.polygon", "vertices need [x, y]");
          ring.push_back({pt[0], pt[1]});
        }
        return SpatialWindow::polygon(std::move(ring));
      }
      fail("window", "needs 'rect' or 'polygon'");
    }();
    return Window(std::move(spatial), require_number(wj, "tmin", "window"),
                  require_number(wj, "tmax", "window"));
  } catch (const std::invalid_argument& e) {
    fail("window", e.what());
  }
}

ScaleLadder parse_ladder(const json& cfg) {
  const json& lj = require(cfg, "ladder", "");
  const auto r = number_list(require(lj, "r", "ladder"), "ladder.r");
  const auto t = number_list(require(lj, "t", "ladder"), "ladder.t");
  try {
    return ScaleLadder(r, t);
  } catch (const std::invalid_argument& e) {
    fail("ladder", e.what());
  }
}

GridResolution parse_resolution(const json& cfg) {
  GridResolution res;
  if (cfg.contains("resolution")) {
    const json& rj = cfg.at("resolution");
    res.n_xy = static_cast<int>(rj.value("n_xy", 24));
    res.n_t = static_cast<int>(rj.value("n_t", 24));
    if (res.n_xy < 2 || res.n_t < 2) fail("resolution", "needs at least 2 cells per axis");
  }
  return res;
}

IntensitySurface parse_intensity(const json& cfg, const Window& w) {
  const json& ij = require(cfg, "intensity", "");
  try {
    if (ij.contains("constant")) {
      if (!ij.at("constant").is_number()) fail("intensity.constant", "expected a number");
      return IntensitySurface::constant(ij.at("constant").get<double>());
    }
    if (ij.contains("file")) return intensity_from_json(read_json(ij.at("file").get<std::string>()));
    if (ij.contains("grid")) {
      json gj = ij.at("grid");
      gj["type"] = "grid";
      if (!gj.contains("rect")) {
        const Rect b = w.spatial.bounding_box();
        gj["rect"] = {b.xmin, b.xmax, b.ymin, b.ymax};
      }
      if (!gj.contains("tmin")) gj["tmin"] = w.tmin;
      if (!gj.contains("tmax")) gj["tmax"] = w.tmax;
      return intensity_from_json(gj);
    }
    if (ij.contains("product")) {
      const json& pj = ij.at("product");
      const auto sample = read_xy_csv(require(pj, "population_csv", "intensity.product")
                                          .get<std::string>());
      if (sample.empty()) fail("intensity.product.population_csv", "no sample points");
      const double bw = pj.contains("bandwidth") ? pj.at("bandwidth").get<double>()
                                                 : scott_bandwidth(sample);
      KdeSurface kde(sample, bw, w.spatial, pj.value("edge_correction", true));
      HarmonicCurve curve;
      if (pj.contains("harmonic")) {
        curve = harmonic_from_json(pj.at("harmonic"));
      } else if (pj.contains("counts_csv")) {
        curve = fit_harmonic(read_counts_csv(pj.at("counts_csv").get<std::string>())).curve;
      } else {
        fail("intensity.product", "needs 'harmonic' coefficients or 'counts_csv'");
      }
      return IntensitySurface::product(std::move(kde), curve, pj.value("rescale", 100.0));
    }
  } catch (const std::invalid_argument& e) {
    fail("intensity", e.what());
  }
  fail("intensity", "needs one of 'constant', 'product', 'grid', 'file'");
}

InteractionParams parse_interaction(const json& cfg, const ScaleLadder& ladder) {
  const json& ij = require(cfg, "interaction", "");
  const bool has_eta = ij.contains("eta");
  const bool has_theta = ij.contains("theta_scaled");
  if (has_eta == has_theta)
    fail("interaction", "give exactly one of 'eta' or 'theta_scaled'");
  try {
    if (has_eta) return InteractionParams(number_list(ij.at("eta"), "interaction.eta"), ladder);
    const auto theta = number_list(ij.at("theta_scaled"), "interaction.theta_scaled");
    return InteractionParams::from_theta_scaled(theta, ladder);
  } catch (const std::invalid_argument& e) {
    fail("interaction", e.what());
  }
}

std::array<int, 3> parse_cells(const json& cfg) {
  const json& qj = require(cfg, "quadrature", "");
  const auto cells = number_list(require(qj, "cells", "quadrature"), "quadrature.cells");
  if (cells.size() != 3) fail("quadrature.cells", "needs [nx, ny, nt]");
  for (double c : cells)
    if (c < 1 || c != std::floor(c)) fail("quadrature.cells", "cell counts must be positive integers");
  return {static_cast<int>(cells[0]), static_cast<int>(cells[1]), static_cast<int>(cells[2])};
}

std::uint64_t parse_seed(const json& cfg, const std::optional<std::uint64_t>& override) {
  if (override) return *override;
  return cfg.value("seed", std::uint64_t{0});
}

void apply_threads(const json& cfg) {
  if (cfg.contains("threads")) set_max_threads(cfg.at("threads").get<int>());
}

std::vector<STPoint> load_points(const std::string& path,
                                 const std::optional<std::array<double, 3>>& rescale) {
  std::vector<STPoint> pts = read_pattern_csv(path);
  if (rescale) {
    for (STPoint& p : pts) {
      p.x *= (*rescale)[0];
      p.y *= (*rescale)[1];
      p.t *= (*rescale)[2];
    }
  }
  return pts;
}

PointPattern pattern_in_window(std::vector<STPoint> pts, const Window& w,
                               const std::string& path) {
  std::string outside;
  int n_outside = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!w.contains(pts[i])) {
      ++n_outside;
      if (n_outside <= 20) outside += (outside.empty() ? "" : ", ") + std::to_string(i);
    }
  }
  if (n_outside > 0)
    throw ValidationError(path + ": " + std::to_string(n_outside) +
                          " points outside the window (rows " + outside +
                          (n_outside > 20 ? ", ..." : "") + ")");
  try {
    return PointPattern(std::move(pts), w);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

json meta_common(const char* command, std::uint64_t seed, GridResolution res, double elapsed,
                 const json& cfg) {
  json meta{{"command", command},
            {"version", kVersion},
            {"seed", seed},
            {"resolution", {{"n_xy", res.n_xy}, {"n_t", res.n_t}}},
            {"elapsed_seconds", elapsed}};
  if (cfg.contains("units")) meta["units"] = cfg.at("units");
  return meta;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

void cmd_simulate(const SimulateArgs& args) {
  const Stopwatch timer;
  const json cfg = read_json(args.config);
  apply_threads(cfg);
  const Window window = parse_window(cfg);
  const ScaleLadder ladder = parse_ladder(cfg);
  const GridResolution res = parse_resolution(cfg);
  const IntensitySurface intensity = parse_intensity(cfg, window);
  const InteractionParams params = parse_interaction(cfg, ladder);
  const std::uint64_t seed = parse_seed(cfg, args.seed);
  const ModelSpec spec(params, intensity, window, res);

  const json& sj = require(cfg, "sampler", "");
  const std::string type = sj.value("type", "mh");

  PointPattern initial;
  if (sj.contains("initial_csv"))
    initial = pattern_in_window(load_points(sj.at("initial_csv").get<std::string>(), {}), window,
                                sj.at("initial_csv").get<std::string>());

  PointPattern final_pattern;
  ChainTrace trace;
  json sampler_meta;
  if (type == "mh") {
    MhConfig mh;
    mh.iterations = static_cast<long>(sj.value("iterations", 20000));
    if (mh.iterations < 1) fail("sampler.iterations", "must be >= 1");
    mh.trace_every = static_cast<long>(sj.value("trace_every", 0));
    mh.seed = seed;
    mh.initial = initial;
    std::tie(final_pattern, trace) = run_mh(spec, mh);
    sampler_meta = {{"type", "mh"},
                    {"iterations", mh.iterations},
                    {"accepted", trace.accepted},
                    {"proposals", trace.proposals}};
  } else if (type == "bd") {
    BdConfig bd;
    bd.max_events = static_cast<long>(sj.value("max_events", 0));
    bd.time_budget = sj.value("time_budget", 0.0);
    if (bd.max_events <= 0 && bd.time_budget <= 0.0)
      fail("sampler", "bd needs max_events or time_budget");
    bd.trace_every = static_cast<long>(sj.value("trace_every", 1));
    bd.seed = seed;
    bd.initial = initial;
    std::tie(final_pattern, trace) = run_bd(spec, bd);
    sampler_meta = {{"type", "bd"},
                    {"jumps", trace.accepted},
                    {"birth_proposals", trace.proposals}};
  } else {
    fail("sampler.type", "must be 'mh' or 'bd'");
  }

  write_pattern_csv(args.out_pattern, final_pattern.points());
  if (!args.out_trace.empty()) write_trace_csv(args.out_trace, trace);

  json meta = meta_common("simulate", seed, res, timer.seconds(), cfg);
  meta["sampler"] = sampler_meta;
  meta["n_points"] = final_pattern.size();
  meta["window_volume"] = window.volume();
  bool poisson = true;
  for (double e : params.eta) poisson = poisson && e == 0.0;
  if (poisson) meta["expected_poisson_mean"] = integrate_intensity(intensity, window);
  write_json(args.out_meta, meta);
}

void cmd_fit(const FitArgs& args) {
  const Stopwatch timer;
  const json cfg = read_json(args.config);
  apply_threads(cfg);
  const Window window = parse_window(cfg);
  const ScaleLadder ladder = parse_ladder(cfg);
  const GridResolution res = parse_resolution(cfg);
  const IntensitySurface intensity = parse_intensity(cfg, window);
  const std::array<int, 3> cells = parse_cells(cfg);
  const std::uint64_t seed = parse_seed(cfg, {});

  std::vector<STPoint> pts = load_points(args.pattern, args.rescale);
  if (pts.empty()) throw ValidationError(args.pattern + ": no data rows");
  const PointPattern pattern = pattern_in_window(std::move(pts), window, args.pattern);

  const QuadratureScheme scheme = build_quadrature(pattern, window, cells, ladder, res);
  std::vector<double> offset(static_cast<std::size_t>(scheme.size()));
  for (int i = 0; i < scheme.size(); ++i) {
    const double lambda = intensity(scheme.points[static_cast<std::size_t>(i)]);
    offset[static_cast<std::size_t>(i)] = lambda > 0.0 ? std::log(lambda) : kNegInf;
  }
  const FitResult fit = fit_mple(scheme, offset);

  json out = to_json(fit);
  out["quadrature"] = {{"cells", {cells[0], cells[1], cells[2]}},
                       {"n_dummy", scheme.n_dummy},
                       {"n_data", scheme.n_data},
                       {"n_rows", scheme.size()}};
  out["resolution"] = {{"n_xy", res.n_xy}, {"n_t", res.n_t}};
  out["seed"] = seed;
  out["version"] = kVersion;
  out["elapsed_seconds"] = timer.seconds();
  write_json(args.out, out);
}

void cmd_suffstats(const SuffstatsArgs& args) {
  const json cfg = read_json(args.config);
  apply_threads(cfg);
  const Window window = parse_window(cfg);
  const ScaleLadder ladder = parse_ladder(cfg);
  const GridResolution res = parse_resolution(cfg);
  const std::array<int, 3> cells = parse_cells(cfg);

  std::vector<STPoint> pts = load_points(args.pattern, args.rescale);
  const PointPattern pattern = pattern_in_window(std::move(pts), window, args.pattern);
  const QuadratureScheme scheme = build_quadrature(pattern, window, cells, ladder, res);
  write_quadrature_csv(args.out, scheme);
}

void cmd_summary(const SummaryArgs& args) {
  const Stopwatch timer;
  const json cfg = read_json(args.config);
  apply_threads(cfg);
  const Window window = parse_window(cfg);
  const std::uint64_t seed = parse_seed(cfg, args.seed);

  std::vector<STPoint> pts = load_points(args.pattern, args.rescale);
  if (pts.empty()) throw ValidationError(args.pattern + ": no data rows");
  PointPattern pattern = pattern_in_window(std::move(pts), window, args.pattern);

  if (args.jitter_spatial > 0.0 || args.jitter_weeks) {
    Rng rng(seed);
    pattern = jitter(pattern, args.jitter_spatial,
                     args.jitter_weeks ? TemporalJitter::uniform_within_week
                                       : TemporalJitter::none,
                     window, rng);
  }

  // spatial projection for the pair correlation function
  std::vector<Point2> planar;
  planar.reserve(static_cast<std::size_t>(pattern.size()));
  for (const STPoint& p : pattern.points()) planar.push_back({p.x, p.y});

  const Rect b = window.spatial.bounding_box();
  const double r_max = args.r_max > 0.0 ? args.r_max : 0.25 * std::min(b.width(), b.height());
  const int r_count = std::max(2, args.r_count);
  std::vector<double> r_grid(static_cast<std::size_t>(r_count));
  for (int k = 0; k < r_count; ++k)
    r_grid[static_cast<std::size_t>(k)] = r_max * (k + 1) / r_count;
  const double bw = args.bandwidth ? *args.bandwidth
                                   : stoyan_bandwidth(pattern.size(), window.spatial.area());
  const PcfEstimate pcf_est = pcf(planar, window.spatial, bw, r_grid);
  write_pcf_csv(args.out_pcf, pcf_est);

  // weekly bin counts over the observation interval
  const int n_weeks = std::max(2, static_cast<int>(std::floor(window.tmax - window.tmin + 1e-9)));
  std::vector<double> weekly(static_cast<std::size_t>(n_weeks), 0.0);
  for (const STPoint& p : pattern.points()) {
    const int k = std::clamp(static_cast<int>(std::floor(p.t - window.tmin)), 0, n_weeks - 1);
    weekly[static_cast<std::size_t>(k)] += 1.0;
  }
  const int max_lag = args.max_lag >= 0 ? std::min(args.max_lag, n_weeks - 1) : n_weeks / 2;
  const AcfEstimate acf_est = acf(weekly, max_lag);
  write_acf_csv(args.out_acf, acf_est);

  json report = to_json(range_report(pcf_est, acf_est));
  report["n_points"] = pattern.size();
  report["pcf_bandwidth"] = bw;
  report["weekly_bins"] = n_weeks;
  report["version"] = kVersion;
  report["seed"] = seed;
  report["elapsed_seconds"] = timer.seconds();
  write_json(args.out_report, report);
}

void cmd_intensity(const IntensityArgs& args) {
  const Stopwatch timer;
  const json cfg = read_json(args.config);
  const Window window = parse_window(cfg);

  if (args.population.empty() && args.counts.empty())
    throw ValidationError("intensity: give --population and/or --counts");

  std::optional<HarmonicFit> harmonic;
  if (!args.counts.empty()) {
    const auto counts = read_counts_csv(args.counts);
    try {
      harmonic = fit_harmonic(counts);
    } catch (const std::invalid_argument& e) {
      throw ValidationError(args.counts + ": " + e.what());
    }
  }

  if (args.population.empty()) {
    // temporal component only: the named-coefficient curve plus fit quality
    json out = {{"type", "harmonic"},
                {"harmonic", to_json(harmonic->curve)},
                {"fit", {{"r_squared", harmonic->r_squared},
                         {"residual_sd", harmonic->residual_sd},
                         {"n_obs", harmonic->n_obs}}},
                {"version", kVersion},
                {"elapsed_seconds", timer.seconds()}};
    write_json(args.out, out);
    return;
  }

  const auto sample = read_xy_csv(args.population);
  if (sample.empty()) throw ValidationError(args.population + ": no sample points");
  const double bw = args.bandwidth ? *args.bandwidth : scott_bandwidth(sample);
  KdeSurface kde(sample, bw, window.spatial, args.edge_correction);

  HarmonicCurve curve;
  double rescale = args.rescale_z;
  if (harmonic) {
    curve = harmonic->curve;
  } else {
    curve.c0 = 1.0;  // flat temporal component: surface reduces to the KDE
    rescale = 1.0;
  }
  const IntensitySurface surface = IntensitySurface::product(std::move(kde), curve, rescale);

  json out = to_json(surface);
  out["kde_bandwidth"] = bw;
  if (harmonic)
    out["harmonic_fit"] = {{"r_squared", harmonic->r_squared},
                           {"residual_sd", harmonic->residual_sd},
                           {"n_obs", harmonic->n_obs}};
  out["version"] = kVersion;
  out["elapsed_seconds"] = timer.seconds();
  write_json(args.out, out);
}

}  // namespace stai::cli
