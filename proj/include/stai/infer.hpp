#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <vector>

#include "stai/model.hpp"

namespace stai {

/// Berman-Turner quadrature scheme: the data points followed by one dummy
/// point per cell center, with counting weights w = v / n_cell, indicators
/// z, responses y = z / w and the matrix S of sufficient statistics (data
/// rows evaluated with the point itself removed from the covering union).
struct QuadratureScheme {
  std::vector<STPoint> points;  // data first, then dummies
  std::vector<int> z;
  std::vector<double> w;
  std::vector<double> y;
  Eigen::MatrixXd S;  // rows align with points, one column per scale
  ScaleLadder ladder;
  std::array<int, 3> cells{};
  int n_data{0};
  int n_dummy{0};

  int size() const { return static_cast<int>(points.size()); }
};

/// Partition the window into nx * ny * nt cells of equal volume, place one
/// dummy per cell center and assemble counting weights and sufficient
/// statistics. For polygon windows, cells whose center falls outside are
/// dropped and retained cell volumes are clipped on a 4x4x4 subgrid.
QuadratureScheme build_quadrature(const PointPattern& pattern, const Window& w,
                                  std::array<int, 3> n_cells, const ScaleLadder& ladder,
                                  GridResolution res = {});

/// Berman-Turner approximation of log PL: sum_j w_j (y_j log lambda_j -
/// lambda_j) with log lambda_j = offset_j - sum_k eta_k S_jk and the
/// convention y log lambda = 0 when y = 0.
double log_pseudolikelihood(const QuadratureScheme& scheme, std::span<const double> offset,
                            std::span<const double> eta);

struct FitOptions {
  bool include_intercept{true};
  int max_iterations{50};
  double deviance_tol{1e-9};
};

/// Maximum pseudo-likelihood estimate. Coefficients are reported on the
/// volume-scaled log scale theta_j = 2 pi r_j^2 t_j log gamma_j (the GLM
/// design uses -S_j / (2 pi r_j^2 t_j)), plus the gamma transform.
struct FitResult {
  bool has_intercept{true};
  double intercept{0.0};
  double intercept_ci_low{0.0};
  double intercept_ci_high{0.0};
  std::vector<double> theta_scaled;
  std::vector<double> theta_ci_low;
  std::vector<double> theta_ci_high;
  std::vector<double> gamma;
  std::vector<double> gamma_ci_low;
  std::vector<double> gamma_ci_high;
  std::vector<double> eta() const;  // theta_scaled / cylinder volume
  Eigen::MatrixXd fisher_information;
  bool converged{false};
  int iterations{0};
  double log_pl{0.0};
  // max-norm of the pseudo-likelihood score at the optimum: the intercept
  // component and the per-scale components on the eta scale
  double score_max_norm{0.0};
  ScaleLadder ladder{std::vector<double>{1.0}, std::vector<double>{1.0}};
};

/// Weighted Poisson IRLS with log link, prior weights w and offset log
/// lambda. Converges when the relative deviance change drops below
/// deviance_tol. Throws on rank deficiency (degenerate scales reported by
/// name); non-convergence is reported through FitResult::converged.
FitResult fit_mple(const QuadratureScheme& scheme, std::span<const double> offset,
                   const FitOptions& options = {});

struct ProfileEntry {
  ScaleLadder ladder;
  double log_pl;
  FitResult fit;
};

struct ProfileResult {
  std::vector<ProfileEntry> ranked;  // descending maximized log PL
  std::vector<std::string> warnings;
};

/// Fit every candidate ladder on the same cell partition and rank by
/// maximized log PL (ties: fewer scales, then lexicographic ladder).
/// Candidates whose fit fails are skipped with a warning record.
ProfileResult profile_scales(const PointPattern& pattern, const Window& w,
                             std::span<const ScaleLadder> candidates,
                             const IntensitySurface& intensity, std::array<int, 3> n_cells,
                             GridResolution res = {}, const FitOptions& options = {});

}  // namespace stai
