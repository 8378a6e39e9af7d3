#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "commands.hpp"
#include "stai/io.hpp"

using namespace stai;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / (std::string("stai_test_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STAI_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const char* kSimpleConfig = R"({
  "window": {"rect": [0, 1, 0, 1], "tmin": 0, "tmax": 1},
  "intensity": {"constant": 50.0},
  "ladder": {"r": [0.03, 0.05], "t": [0.03, 0.05]},
  "interaction": {"theta_scaled": [-5.0, 5.0]},
  "sampler": {"type": "mh", "iterations": 400, "trace_every": 50},
  "quadrature": {"cells": [6, 6, 6]},
  "resolution": {"n_xy": 16, "n_t": 16},
  "seed": 42
})";

}  // namespace

TEST_CASE("pattern csv round trip is idempotent") {
  const fs::path dir = temp_dir("csv");
  const std::vector<STPoint> pts{{0.1, 0.2, 0.3}, {1.0 / 3.0, 0.7777777, 0.5},
                                 {0.123456789012345, 0.9, 0.0001}};
  const fs::path f1 = dir / "a.csv", f2 = dir / "b.csv";
  write_pattern_csv(f1.string(), pts);
  const auto read1 = read_pattern_csv(f1.string());
  REQUIRE(read1.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(same_point(read1[i], pts[i]));
  write_pattern_csv(f2.string(), read1);
  CHECK(slurp(f1) == slurp(f2));
}

TEST_CASE("csv parsing diagnostics") {
  const fs::path dir = temp_dir("csv_bad");
  SUBCASE("comments and header pass") {
    spit(dir / "ok.csv", "# comment\nx,y,t\n0.5,0.5,0.5\n");
    CHECK(read_pattern_csv((dir / "ok.csv").string()).size() == 1);
  }
  SUBCASE("wrong header") {
    spit(dir / "h.csv", "a,b,c\n1,2,3\n");
    CHECK_THROWS_AS(read_pattern_csv((dir / "h.csv").string()), ValidationError);
  }
  SUBCASE("bad number with line position") {
    spit(dir / "n.csv", "x,y,t\n0.5,oops,0.5\n");
    CHECK_THROWS_WITH_AS(read_pattern_csv((dir / "n.csv").string()),
                         doctest::Contains(":2"), ValidationError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_pattern_csv((dir / "absent.csv").string()), ValidationError);
  }
}

TEST_CASE("harmonic curve json round trip") {
  HarmonicCurve curve;
  curve.c0 = 20.5;
  curve.c = {1.0, -2.0, 0.25};
  curve.d = {0.5, 0.125, -3.0};
  curve.e2 = 0.0625;
  const auto j = to_json(curve);
  const HarmonicCurve back = harmonic_from_json(j);
  CHECK(back.c0 == curve.c0);
  CHECK(back.c == curve.c);
  CHECK(back.d == curve.d);
  CHECK(back.e2 == curve.e2);
}

TEST_CASE("intensity surface json round trip") {
  SUBCASE("constant") {
    const auto s = IntensitySurface::constant(7.5);
    const auto back = intensity_from_json(to_json(s));
    CHECK(back({0.3, 0.3, 0.3}) == 7.5);
  }
  SUBCASE("product") {
    KdeSurface kde({{1.0, 1.0}, {2.0, 2.0}}, 0.4, SpatialWindow::rectangle(0, 3, 0, 3), true);
    HarmonicCurve curve;
    curve.c0 = 50.0;
    curve.c = {10.0, 0.0, 0.0};
    const auto s = IntensitySurface::product(kde, curve, 100.0);
    const auto back = intensity_from_json(to_json(s));
    const STPoint p{1.5, 1.2, 10.0};
    CHECK(back(p) == s(p));
  }
  SUBCASE("grid") {
    GridSurface g;
    g.nx = g.ny = g.nt = 2;
    g.values = {1, 2, 3, 4, 5, 6, 7, 8};
    g.box = Rect{0, 1, 0, 1};
    g.tmin = 0;
    g.tmax = 1;
    const auto s = IntensitySurface::grid(g);
    const auto back = intensity_from_json(to_json(s));
    const STPoint p{0.25, 0.75, 0.5};
    CHECK(back(p) == s(p));
  }
}

TEST_CASE("cli: simulate, determinism and metadata") {
  const fs::path dir = temp_dir("cli_sim");
  spit(dir / "cfg.json", kSimpleConfig);
  const std::string base = "simulate --config " + (dir / "cfg.json").string();

  REQUIRE(run_cli(base + " --out-pattern " + (dir / "p1.csv").string() + " --out-trace " +
                  (dir / "t1.csv").string() + " --out-meta " + (dir / "m1.json").string()) == 0);
  REQUIRE(run_cli(base + " --out-pattern " + (dir / "p2.csv").string() + " --out-trace " +
                  (dir / "t2.csv").string() + " --out-meta " + (dir / "m2.json").string()) == 0);
  // identical config and seed: bit-identical pattern and trace
  CHECK(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
  CHECK(slurp(dir / "t1.csv") == slurp(dir / "t2.csv"));
  // a different seed changes the pattern
  REQUIRE(run_cli(base + " --seed 777 --out-pattern " + (dir / "p3.csv").string() +
                  " --out-meta " + (dir / "m3.json").string()) == 0);
  CHECK(slurp(dir / "p1.csv") != slurp(dir / "p3.csv"));

  const auto meta = read_json((dir / "m1.json").string());
  CHECK(meta.at("seed").get<std::uint64_t>() == 42);
  CHECK(meta.at("command").get<std::string>() == "simulate");
  CHECK(meta.contains("elapsed_seconds"));
  CHECK(meta.at("resolution").at("n_xy").get<int>() == 16);
}

TEST_CASE("cli: poisson config records the expected count") {
  const fs::path dir = temp_dir("cli_pois");
  spit(dir / "cfg.json", R"({
    "window": {"rect": [0, 1, 0, 1], "tmin": 0, "tmax": 1},
    "intensity": {"constant": 50.0},
    "ladder": {"r": [0.03, 0.05], "t": [0.03, 0.05]},
    "interaction": {"eta": [0.0, 0.0]},
    "sampler": {"type": "mh", "iterations": 20000},
    "quadrature": {"cells": [10, 10, 10]},
    "seed": 31
  })");
  REQUIRE(run_cli("simulate --config " + (dir / "cfg.json").string() + " --out-pattern " +
                  (dir / "p.csv").string() + " --out-meta " + (dir / "m.json").string()) == 0);
  const auto meta = read_json((dir / "m.json").string());
  CHECK(meta.at("expected_poisson_mean").get<double>() == doctest::Approx(50.0));
  // the realized count is a plausible Poisson(50) draw
  const int n = meta.at("n_points").get<int>();
  CHECK(n > 20);
  CHECK(n < 90);
}

TEST_CASE("cli: birth-and-death sampler") {
  const fs::path dir = temp_dir("cli_bd");
  spit(dir / "cfg.json", R"({
    "window": {"rect": [0, 1, 0, 1], "tmin": 0, "tmax": 1},
    "intensity": {"constant": 20.0},
    "ladder": {"r": [0.05], "t": [0.05]},
    "interaction": {"theta_scaled": [-2.0]},
    "sampler": {"type": "bd", "max_events": 800, "trace_every": 10},
    "quadrature": {"cells": [5, 5, 5]},
    "seed": 11
  })");
  REQUIRE(run_cli("simulate --config " + (dir / "cfg.json").string() + " --out-pattern " +
                  (dir / "p.csv").string() + " --out-trace " + (dir / "t.csv").string() +
                  " --out-meta " + (dir / "m.json").string()) == 0);
  const auto meta = read_json((dir / "m.json").string());
  CHECK(meta.at("sampler").at("type").get<std::string>() == "bd");
  CHECK(meta.at("sampler").at("jumps").get<long>() == 800);
  const std::string trace = slurp(dir / "t.csv");
  CHECK(trace.rfind("iteration,n,log_density,accepted,sojourn\n", 0) == 0);
  // bd requires a stopping rule
  spit(dir / "bad.json", R"({
    "window": {"rect": [0, 1, 0, 1], "tmin": 0, "tmax": 1},
    "intensity": {"constant": 20.0},
    "ladder": {"r": [0.05], "t": [0.05]},
    "interaction": {"eta": [0.0]},
    "sampler": {"type": "bd"},
    "seed": 11
  })");
  CHECK(run_cli("simulate --config " + (dir / "bad.json").string()) == 2);
}

TEST_CASE("cli: validation failures exit with code 2") {
  const fs::path dir = temp_dir("cli_bad");
  SUBCASE("zero iterations") {
    std::string cfg = kSimpleConfig;
    const auto pos = cfg.find("\"iterations\": 400");
    cfg.replace(pos, 17, "\"iterations\": 0");
    spit(dir / "cfg.json", cfg);
    CHECK(run_cli("simulate --config " + (dir / "cfg.json").string()) == 2);
  }
  SUBCASE("both eta and theta_scaled") {
    std::string cfg = kSimpleConfig;
    const auto pos = cfg.find("\"interaction\": {\"theta_scaled\": [-5.0, 5.0]}");
    cfg.replace(pos, 44, "\"interaction\": {\"theta_scaled\": [1.0, 1.0], \"eta\": [0, 0]}");
    spit(dir / "cfg.json", cfg);
    CHECK(run_cli("simulate --config " + (dir / "cfg.json").string()) == 2);
  }
  SUBCASE("malformed json") {
    spit(dir / "cfg.json", "{ not json");
    CHECK(run_cli("simulate --config " + (dir / "cfg.json").string()) == 2);
  }
  SUBCASE("missing window") {
    spit(dir / "cfg.json", R"({"intensity": {"constant": 1.0}})");
    CHECK(run_cli("simulate --config " + (dir / "cfg.json").string()) == 2);
  }
}

TEST_CASE("cli: fit on a simulated pattern") {
  const fs::path dir = temp_dir("cli_fit");
  spit(dir / "cfg.json", kSimpleConfig);
  const fs::path pattern = dir / "pattern.csv";
  REQUIRE(run_cli("simulate --config " + (dir / "cfg.json").string() + " --out-pattern " +
                  pattern.string() + " --out-meta " + (dir / "meta.json").string()) == 0);
  REQUIRE(run_cli("fit --config " + (dir / "cfg.json").string() + " --pattern " +
                  pattern.string() + " --out " + (dir / "fit.json").string()) == 0);
  const auto fit = read_json((dir / "fit.json").string());
  CHECK(fit.at("quadrature").at("n_dummy").get<int>() == 216);
  CHECK(fit.at("theta_scaled").size() == 2);
  CHECK(fit.at("gamma").size() == 2);
  CHECK(fit.contains("intercept"));
  CHECK(fit.at("converged").get<bool>());

  SUBCASE("fit is deterministic") {
    REQUIRE(run_cli("fit --config " + (dir / "cfg.json").string() + " --pattern " +
                    pattern.string() + " --out " + (dir / "fit2.json").string()) == 0);
    auto a = read_json((dir / "fit.json").string());
    auto b = read_json((dir / "fit2.json").string());
    a.erase("elapsed_seconds");
    b.erase("elapsed_seconds");
    CHECK(a == b);
  }
  SUBCASE("empty pattern is a validation error") {
    spit(dir / "empty.csv", "x,y,t\n");
    CHECK(run_cli("fit --config " + (dir / "cfg.json").string() + " --pattern " +
                  (dir / "empty.csv").string()) == 2);
  }
  SUBCASE("out-of-window points are listed by row") {
    spit(dir / "outside.csv", "x,y,t\n0.5,0.5,0.5\n2.0,0.5,0.5\n");
    CHECK(run_cli("fit --config " + (dir / "cfg.json").string() + " --pattern " +
                  (dir / "outside.csv").string()) == 2);
  }
}

TEST_CASE("cli: suffstats export") {
  const fs::path dir = temp_dir("cli_ss");
  spit(dir / "cfg.json", kSimpleConfig);
  spit(dir / "pts.csv", "x,y,t\n0.5,0.5,0.5\n0.52,0.5,0.5\n");
  REQUIRE(run_cli("suffstats --config " + (dir / "cfg.json").string() + " --pattern " +
                  (dir / "pts.csv").string() + " --out " + (dir / "s.csv").string()) == 0);
  const std::string content = slurp(dir / "s.csv");
  CHECK(content.rfind("x,y,t,z,w,s1,s2\n", 0) == 0);
  // 2 data + 216 dummies + header
  int lines = 0;
  for (char c : content)
    if (c == '\n') ++lines;
  CHECK(lines == 219);
}

TEST_CASE("cli: summary and intensity pipeline") {
  const fs::path dir = temp_dir("cli_sum");
  spit(dir / "cfg.json", R"({
    "window": {"rect": [0, 9, 0, 9], "tmin": 0, "tmax": 52},
    "seed": 7
  })");

  // synthetic pattern: two noisy clusters over a year
  Rng rng(12);
  std::vector<STPoint> pts;
  for (int i = 0; i < 300; ++i) {
    const double cx = (i % 2) ? 3.0 : 6.0;
    pts.push_back({std::clamp(cx + 1.2 * (rng.uniform() - 0.5), 0.0, 9.0),
                   std::clamp(4.5 + 2.0 * (rng.uniform() - 0.5), 0.0, 9.0),
                   52.0 * rng.uniform()});
  }
  write_pattern_csv((dir / "pts.csv").string(), pts);

  REQUIRE(run_cli("summary --config " + (dir / "cfg.json").string() + " --pattern " +
                  (dir / "pts.csv").string() + " --out-pcf " + (dir / "pcf.csv").string() +
                  " --out-acf " + (dir / "acf.csv").string() + " --out-report " +
                  (dir / "rep.json").string()) == 0);
  const auto report = read_json((dir / "rep.json").string());
  CHECK(report.at("n_points").get<int>() == 300);
  CHECK(report.contains("suggested_r_max"));
  CHECK(report.contains("suggested_t_max"));
  CHECK(slurp(dir / "pcf.csv").rfind("r,g\n", 0) == 0);
  CHECK(slurp(dir / "acf.csv").rfind("lag,acf\n", 0) == 0);

  // population + weekly counts -> product surface
  std::string pop = "x,y\n";
  for (int i = 0; i < 500; ++i)
    pop += format_double(9 * rng.uniform()) + "," + format_double(9 * rng.uniform()) + "\n";
  spit(dir / "pop.csv", pop);
  std::string counts = "week,count\n";
  for (int t = 0; t < 52; ++t)
    counts += std::to_string(t) + "," +
              std::to_string(30 + static_cast<int>(10 * std::cos(2 * M_PI * t / 52.0))) + "\n";
  spit(dir / "counts.csv", counts);

  REQUIRE(run_cli("intensity --config " + (dir / "cfg.json").string() + " --population " +
                  (dir / "pop.csv").string() + " --counts " + (dir / "counts.csv").string() +
                  " --bandwidth 0.6 --out " + (dir / "surface.json").string()) == 0);
  const auto surface_json = read_json((dir / "surface.json").string());
  CHECK(surface_json.at("type").get<std::string>() == "product");
  CHECK(surface_json.at("harmonic_fit").at("r_squared").get<double>() > 0.9);
  // loadable as a surface and strictly positive mid-window
  const auto surface = intensity_from_json(surface_json);
  CHECK(surface({4.5, 4.5, 26.0}) > 0.0);

  SUBCASE("counts-only emits a named-coefficient curve") {
    REQUIRE(run_cli("intensity --config " + (dir / "cfg.json").string() + " --counts " +
                    (dir / "counts.csv").string() + " --out " + (dir / "curve.json").string()) ==
            0);
    const auto curve = read_json((dir / "curve.json").string());
    CHECK(curve.at("type").get<std::string>() == "harmonic");
    CHECK(curve.at("harmonic").contains("c0"));
    CHECK(curve.at("harmonic").at("c").size() == 3);
  }
  SUBCASE("jitter flags spread duplicated locations and week indices") {
    // integer week stamps with one duplicated location
    spit(dir / "dup.csv", "x,y,t\n3.0,3.0,5\n3.0,3.0,9\n6.0,6.0,20\n");
    REQUIRE(run_cli("summary --config " + (dir / "cfg.json").string() + " --pattern " +
                    (dir / "dup.csv").string() + " --jitter-spatial 0.02 --jitter-weeks" +
                    " --out-pcf " + (dir / "jp.csv").string() + " --out-acf " +
                    (dir / "ja.csv").string() + " --out-report " + (dir / "jr.json").string()) ==
            0);
    CHECK(read_json((dir / "jr.json").string()).at("n_points").get<int>() == 3);
  }
}

TEST_CASE("cli: rescale option maps coordinates on load") {
  const fs::path dir = temp_dir("cli_rescale");
  spit(dir / "cfg.json", kSimpleConfig);
  // pattern in meters/days while the window is in km/weeks
  spit(dir / "pts.csv", "x,y,t\n500,500,3.5\n100,900,1.75\n");
  REQUIRE(run_cli("suffstats --config " + (dir / "cfg.json").string() + " --pattern " +
                  (dir / "pts.csv").string() + " --rescale 0.001 0.001 0.142857142857 --out " +
                  (dir / "s.csv").string()) == 0);
  // without rescaling the points fall outside the window
  CHECK(run_cli("suffstats --config " + (dir / "cfg.json").string() + " --pattern " +
                (dir / "pts.csv").string() + " --out " + (dir / "s2.csv").string()) == 2);
}
