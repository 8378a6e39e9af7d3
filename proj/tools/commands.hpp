#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

namespace stai::cli {

inline constexpr const char* kVersion = "stai 0.1.0";

struct SimulateArgs {
  std::string config;
  std::string out_pattern{"pattern.csv"};
  std::string out_trace;  // empty = skip
  std::string out_meta{"metadata.json"};
  std::optional<std::uint64_t> seed;
};

struct FitArgs {
  std::string config;
  std::string pattern;
  std::string out{"fit.json"};
  std::optional<std::array<double, 3>> rescale;
};

struct SuffstatsArgs {
  std::string config;
  std::string pattern;
  std::string out{"quadrature.csv"};
  std::optional<std::array<double, 3>> rescale;
};

struct SummaryArgs {
  std::string config;
  std::string pattern;
  std::string out_pcf{"pcf.csv"};
  std::string out_acf{"acf.csv"};
  std::string out_report{"summary.json"};
  std::optional<double> bandwidth;
  double r_max{0.0};  // 0 = quarter of the shorter window side
  int r_count{50};
  int max_lag{-1};  // -1 = half the series length
  double jitter_spatial{0.0};
  bool jitter_weeks{false};
  std::optional<std::array<double, 3>> rescale;
  std::optional<std::uint64_t> seed;
};

struct IntensityArgs {
  std::string config;
  std::string population;  // x,y CSV
  std::string counts;      // week,count CSV
  std::string out{"intensity.json"};
  std::optional<double> bandwidth;
  double rescale_z{100.0};
  bool edge_correction{true};
};

void cmd_simulate(const SimulateArgs& args);
void cmd_fit(const FitArgs& args);
void cmd_suffstats(const SuffstatsArgs& args);
void cmd_summary(const SummaryArgs& args);
void cmd_intensity(const IntensityArgs& args);

}  // namespace stai::cli
