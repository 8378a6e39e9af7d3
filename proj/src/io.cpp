#include "stai/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace stai {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' newlines on every platform
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

// comma-separated numeric rows with a mandatory header and '#' comments
std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& header, int columns) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != header)
        throw ValidationError(path + ":" + std::to_string(line_no) + ": expected header '" +
                              header + "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(field, &used);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number '" + field +
                              "'");
      }
      if (used != field.size())
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad number '" + field +
                              "'");
      row.push_back(value);
    }
    if (static_cast<int>(row.size()) != columns)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " fields");
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ValidationError(path + ": missing header '" + header + "'");
  return rows;
}

}  // namespace

std::vector<STPoint> read_pattern_csv(const std::string& path) {
  std::vector<STPoint> pts;
  for (const auto& row : read_numeric_csv(path, "x,y,t", 3))
    pts.push_back({row[0], row[1], row[2]});
  return pts;
}

void write_pattern_csv(const std::string& path, std::span<const STPoint> points) {
  std::ofstream out = open_output(path);
  out << "x,y,t\n";
  for (const STPoint& p : points)
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.t) << '\n';
}

std::vector<Point2> read_xy_csv(const std::string& path) {
  std::vector<Point2> pts;
  for (const auto& row : read_numeric_csv(path, "x,y", 2)) pts.push_back({row[0], row[1]});
  return pts;
}

void write_xy_csv(const std::string& path, std::span<const Point2> points) {
  std::ofstream out = open_output(path);
  out << "x,y\n";
  for (const Point2& p : points)
    out << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

std::vector<std::pair<double, double>> read_counts_csv(const std::string& path) {
  std::vector<std::pair<double, double>> counts;
  for (const auto& row : read_numeric_csv(path, "week,count", 2))
    counts.emplace_back(row[0], row[1]);
  return counts;
}

void write_trace_csv(const std::string& path, const ChainTrace& trace) {
  std::ofstream out = open_output(path);
  out << "iteration,n,log_density,accepted,sojourn\n";
  for (const TraceRow& row : trace.rows)
    out << row.iteration << ',' << row.n << ',' << format_double(row.log_density) << ','
        << (row.accepted ? 1 : 0) << ',' << format_double(row.sojourn) << '\n';
}

void write_pcf_csv(const std::string& path, const PcfEstimate& est) {
  std::ofstream out = open_output(path);
  out << "r,g\n";
  for (std::size_t k = 0; k < est.r.size(); ++k)
    out << format_double(est.r[k]) << ',' << format_double(est.g[k]) << '\n';
}

void write_acf_csv(const std::string& path, const AcfEstimate& est) {
  std::ofstream out = open_output(path);
  out << "lag,acf\n";
  for (std::size_t k = 0; k < est.acf.size(); ++k)
    out << k << ',' << format_double(est.acf[k]) << '\n';
}

void write_quadrature_csv(const std::string& path, const QuadratureScheme& scheme) {
  std::ofstream out = open_output(path);
  out << "x,y,t,z,w";
  for (int j = 0; j < scheme.ladder.size(); ++j) out << ",s" << (j + 1);
  out << '\n';
  for (int i = 0; i < scheme.size(); ++i) {
    const STPoint& p = scheme.points[static_cast<std::size_t>(i)];
    out << format_double(p.x) << ',' << format_double(p.y) << ',' << format_double(p.t) << ','
        << scheme.z[static_cast<std::size_t>(i)] << ','
        << format_double(scheme.w[static_cast<std::size_t>(i)]);
    for (int j = 0; j < scheme.ladder.size(); ++j) out << ',' << format_double(scheme.S(i, j));
    out << '\n';
  }
}

json to_json(const HarmonicCurve& curve) {
  return json{{"c0", curve.c0},
              {"e1", curve.e1},
              {"e2", curve.e2},
              {"c", curve.c},
              {"d", curve.d},
              {"period", curve.period}};
}

HarmonicCurve harmonic_from_json(const json& j) {
  HarmonicCurve curve;
  curve.c0 = j.at("c0").get<double>();
  curve.e1 = j.value("e1", 0.0);
  curve.e2 = j.value("e2", 0.0);
  const auto c = j.at("c").get<std::vector<double>>();
  const auto d = j.at("d").get<std::vector<double>>();
  if (c.size() != 3 || d.size() != 3)
    throw ValidationError("harmonic curve: c and d need exactly 3 coefficients");
  std::copy(c.begin(), c.end(), curve.c.begin());
  std::copy(d.begin(), d.end(), curve.d.begin());
  curve.period = j.value("period", 52.0);
  return curve;
}

namespace {

json window_to_json(const SpatialWindow& w) {
  if (w.is_rectangle()) {
    const Rect& b = w.rect();
    return json{{"rect", {b.xmin, b.xmax, b.ymin, b.ymax}}};
  }
  json ring = json::array();
  for (const auto& v : w.ring()) ring.push_back({v[0], v[1]});
  return json{{"polygon", ring}};
}

SpatialWindow window_from_json(const json& j) {
  if (j.contains("rect")) {
    const auto r = j.at("rect").get<std::vector<double>>();
    if (r.size() != 4) throw ValidationError("window rect needs [xmin, xmax, ymin, ymax]");
    return SpatialWindow::rectangle(r[0], r[1], r[2], r[3]);
  }
  if (j.contains("polygon")) {
    SpatialWindow::Ring ring;
    for (const auto& v : j.at("polygon")) {
      const auto pt = v.get<std::vector<double>>();
      if (pt.size() != 2) throw ValidationError("polygon vertices need [x, y]");
      ring.push_back({pt[0], pt[1]});
    }
    return SpatialWindow::polygon(std::move(ring));
  }
  throw ValidationError("spatial window needs 'rect' or 'polygon'");
}

}  // namespace

json to_json(const IntensitySurface& surface) {
  if (surface.is_constant()) return json{{"type", "constant"}, {"value", surface.as_constant().value}};
  if (surface.is_product()) {
    const auto& pr = surface.as_product();
    json sample = json::array();
    for (const Point2& p : pr.spatial.sample()) sample.push_back({p.x, p.y});
    return json{{"type", "product"},
                {"kde",
                 {{"sample", std::move(sample)},
                  {"bandwidth", pr.spatial.bandwidth()},
                  {"edge_correction", pr.spatial.edge_correction()},
                  {"window", window_to_json(pr.spatial.window())}}},
                {"harmonic", to_json(pr.temporal)},
                {"rescale", pr.rescale}};
  }
  const GridSurface& g = surface.as_grid();
  return json{{"type", "grid"},
              {"nx", g.nx},
              {"ny", g.ny},
              {"nt", g.nt},
              {"values", g.values},
              {"rect", {g.box.xmin, g.box.xmax, g.box.ymin, g.box.ymax}},
              {"tmin", g.tmin},
              {"tmax", g.tmax}};
}

IntensitySurface intensity_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") return IntensitySurface::constant(j.at("value").get<double>());
  if (type == "product") {
    const json& kj = j.at("kde");
    std::vector<Point2> sample;
    for (const auto& v : kj.at("sample")) {
      const auto pt = v.get<std::vector<double>>();
      if (pt.size() != 2) throw ValidationError("kde sample points need [x, y]");
      sample.push_back({pt[0], pt[1]});
    }
    KdeSurface kde(std::move(sample), kj.at("bandwidth").get<double>(),
                   window_from_json(kj.at("window")), kj.value("edge_correction", true));
    return IntensitySurface::product(std::move(kde), harmonic_from_json(j.at("harmonic")),
                                     j.value("rescale", 100.0));
  }
  if (type == "grid") {
    GridSurface g;
    g.nx = j.at("nx").get<int>();
    g.ny = j.at("ny").get<int>();
    g.nt = j.at("nt").get<int>();
    g.values = j.at("values").get<std::vector<double>>();
    const auto r = j.at("rect").get<std::vector<double>>();
    if (r.size() != 4) throw ValidationError("grid surface rect needs 4 numbers");
    g.box = Rect{r[0], r[1], r[2], r[3]};
    g.tmin = j.at("tmin").get<double>();
    g.tmax = j.at("tmax").get<double>();
    return IntensitySurface::grid(std::move(g));
  }
  throw ValidationError("intensity type must be constant, product or grid");
}

json to_json(const FitResult& fit) {
  json scales = json::array();
  for (int k = 0; k < fit.ladder.size(); ++k)
    scales.push_back({{"r", fit.ladder.radius(k)}, {"t", fit.ladder.half_height(k)}});
  json j{{"scales", std::move(scales)},
         {"theta_scaled", fit.theta_scaled},
         {"theta_ci_low", fit.theta_ci_low},
         {"theta_ci_high", fit.theta_ci_high},
         {"gamma", fit.gamma},
         {"gamma_ci_low", fit.gamma_ci_low},
         {"gamma_ci_high", fit.gamma_ci_high},
         {"eta", fit.eta()},
         {"log_pl", fit.log_pl},
         {"converged", fit.converged},
         {"iterations", fit.iterations},
         {"score_max_norm", fit.score_max_norm}};
  if (fit.has_intercept) {
    j["intercept"] = fit.intercept;
    j["intercept_ci_low"] = fit.intercept_ci_low;
    j["intercept_ci_high"] = fit.intercept_ci_high;
  }
  const auto n = static_cast<int>(fit.fisher_information.rows());
  json fisher = json::array();
  for (int a = 0; a < n; ++a) {
    json row = json::array();
    for (int b = 0; b < n; ++b) row.push_back(fit.fisher_information(a, b));
    fisher.push_back(std::move(row));
  }
  j["fisher_information"] = std::move(fisher);
  return j;
}

json to_json(const RangeReport& report) {
  return json{{"pcf_flat_from", report.pcf_flat_from},
              {"suggested_r_max", report.suggested_r_max},
              {"acf_significant_lag", report.acf_significant_lag},
              {"suggested_t_max", report.suggested_t_max},
              {"note", "interpretive bounds: half the settling distance / half the last "
                       "significant lag; pick candidate ladders manually"}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace stai
