#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "commands.hpp"
#include "stai/io.hpp"
#include "stai/parallel.hpp"

namespace {

// shared --rescale sx sy st option
void add_rescale(CLI::App* cmd, std::optional<std::array<double, 3>>& slot) {
  cmd->add_option_function<std::vector<double>>(
         "--rescale",
         [&slot](const std::vector<double>& v) {
           if (v.size() != 3) throw CLI::ValidationError("--rescale needs sx sy st");
           slot = std::array<double, 3>{v[0], v[1], v[2]};
         },
         "Affine coordinate rescale applied on load: sx sy st")
      ->expected(3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal multi-scale area-interaction point processes: "
               "simulation, pseudo-likelihood fitting and exploratory summaries"};
  app.set_version_flag("--version", stai::cli::kVersion);
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "Cap worker threads (0 = hardware)");

  stai::cli::SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Sample the model with the configured sampler");
  sim->add_option("--config", sim_args.config, "Run configuration JSON")->required();
  sim->add_option("--out-pattern", sim_args.out_pattern, "Output pattern CSV");
  sim->add_option("--out-trace", sim_args.out_trace, "Output chain trace CSV");
  sim->add_option("--out-meta", sim_args.out_meta, "Output metadata JSON");
  std::uint64_t sim_seed = 0;
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "Override the config seed");

  stai::cli::FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Maximum pseudo-likelihood fit of a pattern");
  fit->add_option("--config", fit_args.config, "Run configuration JSON")->required();
  fit->add_option("--pattern", fit_args.pattern, "Point pattern CSV")->required();
  fit->add_option("--out", fit_args.out, "Output fit JSON");
  add_rescale(fit, fit_args.rescale);

  stai::cli::SuffstatsArgs ss_args;
  auto* ss = app.add_subcommand("suffstats", "Export the quadrature scheme with the S matrix");
  ss->add_option("--config", ss_args.config, "Run configuration JSON")->required();
  ss->add_option("--pattern", ss_args.pattern, "Point pattern CSV")->required();
  ss->add_option("--out", ss_args.out, "Output quadrature CSV");
  add_rescale(ss, ss_args.rescale);

  stai::cli::SummaryArgs sum_args;
  auto* sum = app.add_subcommand("summary", "Pair correlation, ACF and scale-range report");
  sum->add_option("--config", sum_args.config, "Run configuration JSON")->required();
  sum->add_option("--pattern", sum_args.pattern, "Point pattern CSV")->required();
  sum->add_option("--out-pcf", sum_args.out_pcf, "Output pcf CSV");
  sum->add_option("--out-acf", sum_args.out_acf, "Output acf CSV");
  sum->add_option("--out-report", sum_args.out_report, "Output range report JSON");
  double sum_bw = 0.0;
  auto* sum_bw_opt = sum->add_option("--bandwidth", sum_bw, "pcf kernel bandwidth");
  sum->add_option("--r-max", sum_args.r_max, "Largest pcf distance (0 = auto)");
  sum->add_option("--r-count", sum_args.r_count, "Number of pcf grid distances");
  sum->add_option("--max-lag", sum_args.max_lag, "Largest ACF lag (-1 = half the series)");
  sum->add_option("--jitter-spatial", sum_args.jitter_spatial,
                  "Displace duplicated locations within this radius");
  sum->add_flag("--jitter-weeks", sum_args.jitter_weeks,
                "Spread integer week indices uniformly within their week");
  std::uint64_t sum_seed = 0;
  auto* sum_seed_opt = sum->add_option("--seed", sum_seed, "Override the config seed");
  add_rescale(sum, sum_args.rescale);

  stai::cli::IntensityArgs int_args;
  auto* inten = app.add_subcommand("intensity", "Build the product intensity surface");
  inten->add_option("--config", int_args.config, "Run configuration JSON")->required();
  inten->add_option("--population", int_args.population, "Population sample CSV (x,y)");
  inten->add_option("--counts", int_args.counts, "Weekly counts CSV (week,count)");
  inten->add_option("--out", int_args.out, "Output surface JSON");
  double int_bw = 0.0;
  auto* int_bw_opt = inten->add_option("--bandwidth", int_bw, "KDE bandwidth (default: Scott)");
  inten->add_option("--rescale-z", int_args.rescale_z, "Temporal rescale divisor");
  inten->add_flag("--no-edge-correction", [&int_args](std::int64_t) {
    int_args.edge_correction = false;
  }, "Disable KDE edge correction");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0) stai::set_max_threads(threads);
  if (*sim_seed_opt) sim_args.seed = sim_seed;
  if (*sum_seed_opt) sum_args.seed = sum_seed;
  if (*sum_bw_opt) sum_args.bandwidth = sum_bw;
  if (*int_bw_opt) int_args.bandwidth = int_bw;

  try {
    if (sim->parsed()) stai::cli::cmd_simulate(sim_args);
    if (fit->parsed()) stai::cli::cmd_fit(fit_args);
    if (ss->parsed()) stai::cli::cmd_suffstats(ss_args);
    if (sum->parsed()) stai::cli::cmd_summary(sum_args);
    if (inten->parsed()) stai::cli::cmd_intensity(int_args);
  } catch (const stai::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
