#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stai/intensity.hpp"

using namespace stai;

TEST_CASE("constant surface") {
  const auto s = IntensitySurface::constant(50.0);
  CHECK(s({0.2, 0.9, 0.5}) == 50.0);
  CHECK(s.upper_bound(Window(SpatialWindow::rectangle(0, 1, 0, 1), 0, 1)) == 50.0);
  CHECK_THROWS(IntensitySurface::constant(-1.0));
}

TEST_CASE("kde: peak, separation, linearity") {
  const auto window = SpatialWindow::rectangle(-10, 10, -10, 10);
  const double bw = 0.25;

  SUBCASE("single kernel peak is 1/(2 pi bw^2)") {
    const KdeSurface kde({{0.0, 0.0}}, bw, window, false);
    CHECK(kde(0.0, 0.0) == doctest::Approx(1.0 / (2 * M_PI * bw * bw)).epsilon(1e-12));
  }
  SUBCASE("distant points do not interact") {
    const KdeSurface kde({{-5.0, 0.0}, {5.0, 0.0}}, bw, window, false);
    const KdeSurface lone({{-5.0, 0.0}}, bw, window, false);
    CHECK(std::abs(kde(-5.0, 0.0) - lone(-5.0, 0.0)) < 1e-12);
  }
  SUBCASE("kde of concatenated samples is the sum of the kdes") {
    const std::vector<Point2> a{{0.1, 0.2}, {0.5, -0.3}};
    const std::vector<Point2> b{{-1.0, 2.0}, {0.7, 0.7}, {2.0, -2.0}};
    std::vector<Point2> both = a;
    both.insert(both.end(), b.begin(), b.end());
    const KdeSurface ka(a, bw, window, true), kb(b, bw, window, true),
        kab(both, bw, window, true);
    for (double x : {-0.5, 0.0, 1.3})
      CHECK(kab(x, 0.4) == doctest::Approx(ka(x, 0.4) + kb(x, 0.4)).epsilon(1e-12));
  }
  SUBCASE("integral over a fine grid recovers the sample size") {
    // window much larger than the bandwidth, edge correction on
    const std::vector<Point2> sample{{-2.0, 1.0}, {0.0, 0.0}, {3.0, -1.5}, {1.0, 2.5}};
    const KdeSurface kde(sample, bw, window, true);
    const int n = 400;
    double integral = 0.0;
    const double step = 20.0 / n;
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix)
        integral += kde(-10 + (ix + 0.5) * step, -10 + (iy + 0.5) * step);
    integral *= step * step;
    CHECK(integral == doctest::Approx(4.0).epsilon(0.01));
  }
  SUBCASE("edge correction doubles the density on a face") {
    const auto half = SpatialWindow::rectangle(0, 10, -10, 10);
    const KdeSurface raw({{0.0, 0.0}}, bw, half, false);
    const KdeSurface corrected({{0.0, 0.0}}, bw, half, true);
    CHECK(corrected(0.0, 0.0) == doctest::Approx(2.0 * raw(0.0, 0.0)).epsilon(1e-6));
  }
  CHECK_THROWS(KdeSurface({}, bw, window, false));
  CHECK_THROWS(KdeSurface({{0, 0}}, 0.0, window, false));
}

TEST_CASE("scott bandwidth helper") {
  Rng rng(4);
  std::vector<Point2> sample;
  for (int i = 0; i < 500; ++i) sample.push_back({rng.uniform(), rng.uniform()});
  const double bw = scott_bandwidth(sample);
  // uniform on [0,1]: sigma ~ 0.289, n^{-1/6} ~ 0.355
  CHECK(bw == doctest::Approx(0.289 * std::pow(500.0, -1.0 / 6.0)).epsilon(0.1));
}

TEST_CASE("harmonic regression") {
  SUBCASE("noiseless coefficients are recovered") {
    HarmonicCurve truth;
    truth.c0 = 20.0;
    truth.c = {3.0, -1.5, 0.5};
    truth.d = {-2.0, 0.75, 0.25};
    truth.e2 = 0.05;
    std::vector<std::pair<double, double>> counts;
    for (int t = 0; t < 52; ++t) counts.emplace_back(t, truth(t));
    const HarmonicFit fit = fit_harmonic(counts);
    CHECK(fit.curve.c0 == doctest::Approx(20.0).epsilon(1e-8));
    for (int j = 0; j < 3; ++j) {
      CHECK(fit.curve.c[j] == doctest::Approx(truth.c[j]).epsilon(1e-8));
      CHECK(fit.curve.d[j] == doctest::Approx(truth.d[j]).epsilon(1e-8));
    }
    CHECK(fit.curve.e2 == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("pure intercept") {
    std::vector<std::pair<double, double>> counts;
    for (int t = 0; t < 52; ++t) counts.emplace_back(t, 10.0);
    const HarmonicFit fit = fit_harmonic(counts);
    CHECK(fit.curve.c0 == doctest::Approx(10.0).epsilon(1e-8));
    for (int j = 0; j < 3; ++j) {
      CHECK(fit.curve.c[j] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
      CHECK(fit.curve.d[j] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    }
    CHECK(fit.curve.e2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  }
  SUBCASE("school-term template: dip recovered in weeks 26-39") {
    // seasonal dip centered around week 30 plus noise
    Rng rng(8);
    std::vector<std::pair<double, double>> counts;
    for (int t = 0; t < 52; ++t) {
      const double dip = 30.0 + 14.0 * std::cos(2 * M_PI * (t - 4.0) / 52.0);
      counts.emplace_back(t, dip + 2.0 * (rng.uniform() - 0.5));
    }
    const HarmonicFit fit = fit_harmonic(counts);
    // fitted curve decreasing into the dip and increasing out of it
    CHECK(fit.curve(26.0) > fit.curve(30.0));
    CHECK(fit.curve(44.0) > fit.curve(38.0));
    double arg_min = 0.0;
    double best = fit.curve(0.0);
    for (int t = 0; t <= 519; ++t) {
      const double v = fit.curve(t / 10.0);
      if (v < best) {
        best = v;
        arg_min = t / 10.0;
      }
    }
    CHECK(arg_min >= 26.0);
    CHECK(arg_min <= 39.0);
  }
  SUBCASE("rank-deficient design is rejected") {
    std::vector<std::pair<double, double>> counts(12, {5.0, 1.0});  // constant t
    CHECK_THROWS(fit_harmonic(counts));
  }
  SUBCASE("too few observations") {
    std::vector<std::pair<double, double>> counts;
    for (int t = 0; t < 8; ++t) counts.emplace_back(t, 1.0);
    CHECK_THROWS(fit_harmonic(counts));
  }
}

TEST_CASE("grid surface: trilinear lookup") {
  GridSurface g;
  g.nx = g.ny = g.nt = 3;
  g.values.assign(27, 7.0);
  g.box = Rect{0, 1, 0, 1};
  g.tmin = 0;
  g.tmax = 1;
  const auto s = IntensitySurface::grid(g);
  CHECK(s({0.0, 0.0, 0.0}) == doctest::Approx(7.0));
  CHECK(s({0.5, 0.5, 0.5}) == doctest::Approx(7.0));
  CHECK(s({0.25, 0.75, 0.1}) == doctest::Approx(7.0));
  CHECK(s.upper_bound(Window(SpatialWindow::rectangle(0, 1, 0, 1), 0, 1)) == 7.0);

  GridSurface bad = g;
  bad.values[3] = -1.0;
  CHECK_THROWS(IntensitySurface::grid(bad));
}

TEST_CASE("product surface: separability and single-atom value") {
  const auto window = SpatialWindow::rectangle(0, 10, 0, 10);
  const double bw = 0.5;
  KdeSurface kde({{5.0, 5.0}}, bw, window, false);
  HarmonicCurve curve;
  curve.c0 = 100.0;
  curve.c = {30.0, 0.0, 0.0};
  const auto s = IntensitySurface::product(kde, curve, 100.0);

  SUBCASE("single-atom product value is analytic") {
    const double expect = 1.0 / (2 * M_PI * bw * bw) * curve.clamped(0.0) / 100.0;
    CHECK(s({5.0, 5.0, 0.0}) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("temporal ratio is independent of location") {
    const double r1 = s({5.0, 5.0, 10.0}) / s({5.0, 5.0, 20.0});
    const double r2 = s({6.0, 4.0, 10.0}) / s({6.0, 4.0, 20.0});
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-10));
  }
  SUBCASE("negative temporal values clamp to zero") {
    HarmonicCurve neg;
    neg.c0 = -5.0;
    const auto z = IntensitySurface::product(kde, neg, 100.0);
    CHECK(z({5.0, 5.0, 1.0}) == 0.0);
  }
}

TEST_CASE("intensity integral") {
  const Window w(SpatialWindow::rectangle(0, 2, 0, 3), 0, 4);
  CHECK(integrate_intensity(IntensitySurface::constant(5.0), w) == doctest::Approx(5.0 * 24.0));
}

TEST_CASE("population synthesis") {
  Rng rng(17);
  const std::vector<CensusSection> sections{
      {SpatialWindow::rectangle(0, 1, 0, 1), 100},
      {SpatialWindow::polygon({{2, 0}, {3, 0}, {3, 1}}), 50},
  };
  const auto sample = synthesize_population(sections, rng);
  REQUIRE(sample.size() == 150);
  for (std::size_t i = 0; i < 100; ++i) {
    CHECK(sample[i].x >= 0.0);
    CHECK(sample[i].x <= 1.0);
  }
  for (std::size_t i = 100; i < 150; ++i) CHECK(sections[1].region.contains(sample[i].x, sample[i].y));
}
