#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "stai/model.hpp"

using namespace stai;

namespace {

Window unit_cube() { return Window(SpatialWindow::rectangle(0, 1, 0, 1), 0, 1); }

ModelSpec make_spec(std::vector<double> eta, ScaleLadder ladder, double lambda = 50.0) {
  return ModelSpec(InteractionParams(std::move(eta), std::move(ladder)),
                   IntensitySurface::constant(lambda), unit_cube());
}

PointPattern random_pattern(Rng& rng, int n, const Window& w) {
  std::vector<STPoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  return PointPattern(std::move(pts), w);
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("interaction parameters: scale conversions") {
  const ScaleLadder lad({0.03, 0.05}, {0.03, 0.05});
  const auto params = InteractionParams::from_theta_scaled(std::vector<double>{-5.0, 5.0}, lad);
  CHECK(params.theta_scaled(0) == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK(params.theta_scaled(1) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(params.eta[0] == doctest::Approx(-5.0 / (2 * M_PI * 0.03 * 0.03 * 0.03)));
  CHECK(params.gamma(0) < 1.0);
  CHECK(params.gamma(1) > 1.0);
  CHECK_THROWS(InteractionParams({1.0}, ScaleLadder({0.1, 0.2}, {0.1, 0.2})));
}

TEST_CASE("suff stats") {
  const ScaleLadder lad({0.03, 0.05}, {0.03, 0.05});
  const ModelSpec spec = make_spec({1.0, 1.0}, lad);
  const STPoint p{0.5, 0.5, 0.5};

  SUBCASE("empty pattern gives the clipped cylinder volumes") {
    const SuffStats s = suff_stats(p, PointPattern{}, spec);
    for (int j = 0; j < 2; ++j)
      CHECK(s.s[j] ==
            clipped_cylinder_volume(lad.cylinder(p, j), spec.window, spec.resolution));
  }
  SUBCASE("a pattern point at the same center covers everything") {
    const PointPattern pattern({{0.5, 0.5, 0.5}}, spec.window);
    const SuffStats s = suff_stats(p, pattern, spec);
    CHECK(s.s[0] == 0.0);
    CHECK(s.s[1] == 0.0);
  }
  SUBCASE("self exclusion by index restores the empty-union value") {
    const PointPattern pattern({{0.5, 0.5, 0.5}}, spec.window);
    const SuffStats s = suff_stats(p, pattern, spec, 0);
    CHECK(s.s[0] == clipped_cylinder_volume(lad.cylinder(p, 0), spec.window, spec.resolution));
  }
  SUBCASE("Markov restriction equals the full-union evaluation, 50 random patterns") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
      const PointPattern pattern = random_pattern(rng, 30, spec.window);
      const STPoint q{rng.uniform(), rng.uniform(), rng.uniform()};
      const SuffStats via_markov = suff_stats(q, pattern, spec);
      for (int j = 0; j < 2; ++j) {
        // oracle: no locality filter, every pattern cylinder in the union
        std::vector<Cylinder> all;
        for (const STPoint& x : pattern.points())
          all.push_back(lad.cylinder(x, j));
        const double full = uncovered_volume(lad.cylinder(q, j), all, spec.window,
                                             spec.resolution);
        CHECK(via_markov.s[j] == full);
      }
    }
  }
  SUBCASE("bin-index route equals the direct route") {
    Rng rng(42);
    const PointPattern pattern = random_pattern(rng, 120, spec.window);
    const BinIndex index(pattern.points(), spec.window, lad.radius(1), lad.half_height(1));
    for (int rep = 0; rep < 30; ++rep) {
      const STPoint q{rng.uniform(), rng.uniform(), rng.uniform()};
      const SuffStats a = suff_stats(q, pattern, spec);
      const SuffStats b = suff_stats(q, pattern, index, spec);
      CHECK(a.s == b.s);
    }
  }
}

TEST_CASE("log papangelou") {
  const ScaleLadder lad({0.03, 0.05}, {0.03, 0.05});

  SUBCASE("Poisson reduction is exact for every pattern") {
    const ModelSpec spec = make_spec({0.0, 0.0}, lad);
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
      const PointPattern pattern = random_pattern(rng, 25, spec.window);
      const STPoint p{rng.uniform(), rng.uniform(), rng.uniform()};
      CHECK(log_papangelou(p, pattern, spec) == std::log(50.0));
    }
  }
  SUBCASE("isolated point at m=1 with scaled theta -5") {
    const ScaleLadder one({0.03}, {0.03});
    const auto params = InteractionParams::from_theta_scaled(std::vector<double>{-5.0}, one);
    const ModelSpec spec(params, IntensitySurface::constant(50.0), unit_cube());
    const double got = log_papangelou({0.5, 0.5, 0.5}, PointPattern{}, spec);
    CHECK(got == doctest::Approx(std::log(50.0) + 5.0).epsilon(0.02));
  }
  SUBCASE("zero intensity gives -infinity") {
    const ModelSpec spec = make_spec({1.0, 1.0}, lad, 0.0);
    CHECK(log_papangelou({0.5, 0.5, 0.5}, PointPattern{}, spec) == -kInf);
  }
  SUBCASE("Markov locality is exact") {
    const ModelSpec spec = make_spec({200.0, -150.0}, lad);
    Rng rng(19);
    for (int rep = 0; rep < 20; ++rep) {
      const PointPattern pattern = random_pattern(rng, 60, spec.window);
      const STPoint p{rng.uniform(), rng.uniform(), rng.uniform()};
      // neighbors-only subpattern at the relation range of the widest scale
      std::vector<STPoint> nbrs;
      for (const STPoint& q : pattern.points()) {
        const double dx = q.x - p.x, dy = q.y - p.y;
        if (std::sqrt(dx * dx + dy * dy) <= 2 * lad.radius(1) &&
            std::abs(q.t - p.t) <= 2 * lad.half_height(1))
          nbrs.push_back(q);
      }
      const PointPattern sub(nbrs, spec.window);
      CHECK(log_papangelou(p, pattern, spec) == log_papangelou(p, sub, spec));
    }
  }
  SUBCASE("product form vs shell form on random cases") {
    Rng rng(23);
    const ScaleLadder lad3({0.04, 0.07, 0.1}, {0.03, 0.06, 0.09});
    const ModelSpec spec(InteractionParams({300.0, -200.0, 120.0}, lad3),
                         IntensitySurface::constant(10.0), unit_cube());
    for (int rep = 0; rep < 20; ++rep) {
      const PointPattern pattern = random_pattern(rng, 40, spec.window);
      const STPoint p{rng.uniform(), rng.uniform(), rng.uniform()};
      const double product_form = log_papangelou(p, pattern, spec);
      const double shell_form = log_papangelou_shell_form(p, pattern, spec);
      // the two routes use different grids; allow combined grid tolerance
      double tol = 0.0;
      for (int j = 0; j < 3; ++j)
        tol += std::abs(spec.params.eta[j]) *
               oracle::grid_error_bound(lad3.cylinder(p, j), 4, spec.resolution);
      CHECK(std::abs(product_form - shell_form) < tol);
    }
  }
  SUBCASE("shell identity for an isolated point (Abel summation)") {
    const ScaleLadder lad3({0.04, 0.07, 0.1}, {0.03, 0.06, 0.09});
    const std::vector<double> eta{300.0, -200.0, 120.0};
    const ModelSpec spec(InteractionParams(eta, lad3), IntensitySurface::constant(10.0),
                         unit_cube());
    const STPoint p{0.5, 0.5, 0.5};
    // sum_j (sum_{i>=j} eta_i) l(F_j) == sum_j eta_j l(C_j) on the same grid
    const GridResolution res = spec.resolution;
    double lhs = 0.0;
    for (int j = 0; j < 3; ++j) {
      double suffix = 0.0;
      for (int i = j; i < 3; ++i) suffix += eta[i];
      lhs += suffix * shell_volume(p, lad3, j, spec.window, res, 2);
    }
    double rhs = 0.0;
    const VolumeGrid g = cylinder_grid(lad3.cylinder(p, 2), res);
    for (int j = 0; j < 3; ++j)
      rhs += eta[j] * cylinder_volume_on(g, lad3.cylinder(p, j), spec.window);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("log density ratio") {
  const ScaleLadder lad({0.03, 0.05}, {0.03, 0.05});
  const ModelSpec spec = make_spec({100.0, -80.0}, lad);
  Rng rng(31);

  SUBCASE("alias of log papangelou") {
    for (int rep = 0; rep < 10; ++rep) {
      const PointPattern pattern = random_pattern(rng, 20, spec.window);
      const STPoint u{rng.uniform(), rng.uniform(), rng.uniform()};
      CHECK(log_density_ratio(pattern, u, spec) == log_papangelou(u, pattern, spec));
    }
  }
  SUBCASE("points beyond the Markov range change nothing") {
    const PointPattern pattern({{0.1, 0.1, 0.1}}, spec.window);
    const STPoint far{0.9, 0.9, 0.9};  // farther than 2 r_m and 2 t_m from everything
    CHECK(log_density_ratio(pattern, far, spec) ==
          log_density_ratio(PointPattern{}, far, spec));
  }
  SUBCASE("hereditary: every subpattern keeps a finite cumulative ratio") {
    const PointPattern pattern = random_pattern(rng, 12, spec.window);
    double acc = 0.0;
    PointPattern sub;
    for (const STPoint& p : pattern.points()) {
      acc += log_density_ratio(sub, p, spec);
      std::vector<STPoint> pts(sub.points().begin(), sub.points().end());
      pts.push_back(p);
      sub = PointPattern(std::move(pts), spec.window);
      CHECK(std::isfinite(acc));
    }
  }
}

TEST_CASE("log unnormalized density") {
  const ScaleLadder one({0.03}, {0.03});

  SUBCASE("empty pattern has log density 0") {
    const ModelSpec spec = make_spec({2.0}, one);
    CHECK(log_unnormalized_density(PointPattern{}, spec) == 0.0);
  }
  SUBCASE("single interior point at scaled theta -5") {
    const auto params = InteractionParams::from_theta_scaled(std::vector<double>{-5.0}, one);
    const ModelSpec spec(params, IntensitySurface::constant(50.0), unit_cube());
    const PointPattern pattern({{0.5, 0.5, 0.5}}, spec.window);
    CHECK(log_unnormalized_density(pattern, spec) ==
          doctest::Approx(std::log(50.0) + 5.0).epsilon(0.02));
  }
  SUBCASE("telescoping against log_density_ratio, 50 random cases") {
    const ScaleLadder lad({0.05, 0.08}, {0.05, 0.08});
    const ModelSpec spec(InteractionParams({120.0, -90.0}, lad),
                         IntensitySurface::constant(20.0), unit_cube());
    Rng rng(57);
    for (int rep = 0; rep < 50; ++rep) {
      const PointPattern pattern = random_pattern(rng, 6, spec.window);
      const STPoint u{rng.uniform(), rng.uniform(), rng.uniform()};
      std::vector<STPoint> plus(pattern.points().begin(), pattern.points().end());
      plus.push_back(u);
      const PointPattern extended(std::move(plus), spec.window);
      const double lhs =
          log_unnormalized_density(extended, spec) - log_unnormalized_density(pattern, spec);
      const double rhs = log_density_ratio(pattern, u, spec);
      // union grids differ between the three evaluations
      double tol = 0.0;
      for (int j = 0; j < 2; ++j)
        tol += 2.0 * std::abs(spec.params.eta[j]) *
               oracle::grid_error_bound(lad.cylinder(u, j), 7, spec.resolution);
      CHECK(std::abs(lhs - rhs) < tol);
    }
  }
  SUBCASE("integrability bound on random patterns") {
    const ScaleLadder lad({0.05, 0.08}, {0.05, 0.08});
    const ModelSpec spec(InteractionParams({120.0, -90.0}, lad),
                         IntensitySurface::constant(20.0), unit_cube());
    Rng rng(61);
    for (int rep = 0; rep < 20; ++rep) {
      const PointPattern pattern = random_pattern(rng, 15, spec.window);
      double bound = pattern.size() * std::log(20.0);
      for (double e : spec.params.eta) bound += std::max(0.0, -e) * spec.window.volume();
      CHECK(log_unnormalized_density(pattern, spec) <= bound + 1e-9);
    }
  }
}

TEST_CASE("monotone influence: enlarging the pattern never increases s_j") {
  const ScaleLadder lad({0.04, 0.06}, {0.04, 0.06});
  const ModelSpec spec = make_spec({1.0, 1.0}, lad);
  Rng rng(71);
  const STPoint p{0.5, 0.5, 0.5};
  std::vector<STPoint> pts;
  SuffStats prev = suff_stats(p, PointPattern{}, spec);
  for (int k = 0; k < 12; ++k) {
    pts.push_back({0.4 + 0.2 * rng.uniform(), 0.4 + 0.2 * rng.uniform(),
                   0.4 + 0.2 * rng.uniform()});
    const SuffStats next = suff_stats(p, PointPattern(pts, spec.window), spec);
    for (int j = 0; j < 2; ++j) CHECK(next.s[j] <= prev.s[j] + 1e-15);
    prev = next;
  }
}

TEST_CASE("model spec validation") {
  const ScaleLadder lad({0.03}, {0.03});
  CHECK_THROWS(ModelSpec(InteractionParams({0.0}, lad), IntensitySurface::constant(1.0),
                         unit_cube(), GridResolution{1, 24}));
}
