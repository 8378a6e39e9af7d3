#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "stai/infer.hpp"
#include "stai/intensity.hpp"
#include "stai/sim.hpp"
#include "stai/summaries.hpp"

namespace stai {

/// Input and configuration problems; the CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// shortest round-trip decimal formatting shared by all writers
std::string format_double(double v);

// point-pattern CSV: header "x,y,t", '#' comments, '\n' newlines
std::vector<STPoint> read_pattern_csv(const std::string& path);
void write_pattern_csv(const std::string& path, std::span<const STPoint> points);

// planar sample CSV: header "x,y"
std::vector<Point2> read_xy_csv(const std::string& path);
void write_xy_csv(const std::string& path, std::span<const Point2> points);

// weekly counts CSV: header "week,count"
std::vector<std::pair<double, double>> read_counts_csv(const std::string& path);

void write_trace_csv(const std::string& path, const ChainTrace& trace);
void write_pcf_csv(const std::string& path, const PcfEstimate& est);
void write_acf_csv(const std::string& path, const AcfEstimate& est);
void write_quadrature_csv(const std::string& path, const QuadratureScheme& scheme);

nlohmann::json to_json(const HarmonicCurve& curve);
HarmonicCurve harmonic_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IntensitySurface& surface);
IntensitySurface intensity_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const RangeReport& report);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace stai
