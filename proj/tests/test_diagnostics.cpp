#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ipla/diagnostics.hpp"
#include "ipla/errors.hpp"
#include "ipla/noise.hpp"
#include "ipla/toy_models.hpp"

using namespace ipla;

namespace {

EmpiricalLaw law_1d(std::initializer_list<double> values) {
  EmpiricalLaw law;
  law.samples.resize(static_cast<Index>(values.size()), 1);
  Index i = 0;
  for (double v : values) law.samples(i++, 0) = v;
  return law;
}

}  // namespace

TEST_CASE("w2 to a point mass: hand cases") {
  CHECK(w2_to_dirac(law_1d({1.0, 1.0, 1.0}), Vector::Constant(1, 1.0)) == 0.0);
  CHECK(w2_to_dirac(law_1d({0.0, 2.0}), Vector::Constant(1, 1.0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w2_to_dirac(law_1d({0.0, 0.0, 3.0}), Vector::Zero(1)) ==
        doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
  CHECK_THROWS_AS(w2_to_dirac(EmpiricalLaw{Matrix(0, 1)}, Vector::Zero(1)), EmptySample);
}

TEST_CASE("w2 to a point mass equals the loop oracle on random laws") {
  const NoiseStream fill(8, 1);
  for (int rep = 0; rep < 20; ++rep) {
    EmpiricalLaw law;
    law.samples.resize(13, 3);
    for (Index i = 0; i < 13; ++i)
      law.samples.row(i) =
          fill.normals(static_cast<std::uint64_t>(rep * 16 + i), 3).transpose();
    const Vector point = fill.normals(static_cast<std::uint64_t>(rep * 16 + 15), 3);
    double acc = 0.0;
    for (Index i = 0; i < 13; ++i)
      acc += (law.samples.row(i).transpose() - point).squaredNorm();
    const double oracle = std::sqrt(acc / 13.0);
    CHECK(std::abs(w2_to_dirac(law, point) - oracle) < 1e-12);
  }
}

TEST_CASE("exact 1-D W2 via sorted samples") {
  CHECK(w2_1d(law_1d({4.0, -1.0, 2.0}), law_1d({2.0, 4.0, -1.0})) == 0.0);
  CHECK(w2_1d(law_1d({0.0, 0.0}), law_1d({1.0, 1.0})) == doctest::Approx(1.0));
  CHECK(w2_1d(law_1d({0.0, 1.0}), law_1d({1.0, 0.0})) == 0.0);
  CHECK_THROWS_AS(w2_1d(law_1d({0.0, 1.0}), law_1d({1.0})), SizeMismatch);
}

TEST_CASE("w2_1d behaves as a metric on equal-size multisets") {
  const NoiseStream fill(3, 2);
  for (int rep = 0; rep < 25; ++rep) {
    const auto mk = [&](int which) {
      EmpiricalLaw law;
      law.samples = fill.normals(static_cast<std::uint64_t>(rep * 4 + which), 9);
      law.samples.resize(9, 1);
      return law;
    };
    const EmpiricalLaw a = mk(0), b = mk(1), c = mk(2);
    const double ab = w2_1d(a, b), ba = w2_1d(b, a);
    const double ac = w2_1d(a, c), cb = w2_1d(c, b);
    CHECK(ab == ba);
    CHECK(ab <= ac + cb + 1e-12);
    CHECK(w2_1d(a, a) == 0.0);
  }
}

TEST_CASE("error bound: concentration-only limit") {
  BoundInputs b;
  b.mu = 0.5 * (3.0 - std::sqrt(5.0));
  b.d_theta = 1;
  b.d_x = 1;
  b.n_particles = 100;
  b.n_steps = 100000;  // ergodic term ~ 0
  b.gamma = 0.001;
  b.z0_dist = 0.0;
  const BoundTerms t = error_bound(b);
  CHECK(t.concentration == doctest::Approx(std::sqrt(2.0 / (100.0 * b.mu))).epsilon(1e-12));
  CHECK(t.concentration == doctest::Approx(0.22882).epsilon(1e-4));
  CHECK(t.ergodic < 1e-10);
  CHECK(!t.has_discretization);
  CHECK(t.total == doctest::Approx(t.concentration + t.ergodic));
}

TEST_CASE("error bound: zero steps leave the full initial ergodic mass") {
  BoundInputs b;
  b.mu = 1.0;
  b.d_theta = 2;
  b.d_x = 3;
  b.n_particles = 10;
  b.n_steps = 0;
  b.gamma = 0.05;
  b.z0_dist = 0.0;
  const BoundTerms t = error_bound(b);
  CHECK(t.ergodic == doctest::Approx(std::sqrt((3.0 * 10.0 + 2.0) / 10.0)).epsilon(1e-12));
}

TEST_CASE("error bound monotonicity on grids") {
  BoundInputs base;
  base.mu = 0.4;
  base.d_theta = 1;
  base.d_x = 2;
  base.n_particles = 50;
  base.n_steps = 100;
  base.gamma = 0.01;
  base.z0_dist = 2.0;
  base.c_disc = 1.7;

  double prev = std::numeric_limits<double>::infinity();
  for (long n : {10L, 40L, 160L, 640L, 2560L}) {
    BoundInputs b = base;
    b.n_particles = n;
    const double cur = error_bound(b).concentration;
    CHECK(cur < prev);
    prev = cur;
  }
  prev = std::numeric_limits<double>::infinity();
  for (std::uint64_t n : {0ull, 10ull, 100ull, 1000ull}) {
    BoundInputs b = base;
    b.n_steps = n;
    const double cur = error_bound(b).ergodic;
    CHECK(cur <= prev);
    prev = cur;
  }
  double prev_disc = 0.0;
  for (double g : {0.001, 0.004, 0.016, 0.064}) {
    BoundInputs b = base;
    b.gamma = g;
    const double cur = error_bound(b).discretization;
    CHECK(cur > prev_disc);
    prev_disc = cur;
  }
}

TEST_CASE("error bound rejects gamma outside the window") {
  BoundInputs b;
  b.mu = 0.4;
  b.d_theta = 1;
  b.d_x = 1;
  b.n_particles = 10;
  b.n_steps = 10;
  b.gamma = 6.0;  // 2/mu = 5
  b.z0_dist = 0.0;
  CHECK_THROWS_AS(error_bound(b), GammaOutOfRange);
  b.gamma = 0.45;
  b.lipschitz_L = 2.5;  // 1/L = 0.4
  CHECK_THROWS_AS(error_bound(b), GammaOutOfRange);
  b.gamma = 0.39;
  CHECK_NOTHROW(error_bound(b));
}

TEST_CASE("rate fit recovers planted power laws") {
  const RateFit f1 = fit_rate({{10.0, 1.0}, {100.0, std::pow(10.0, -0.5)}, {1000.0, 0.1}});
  CHECK(f1.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(f1.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const RateFit f2 = fit_rate({{1.0, 3.0}, {7.0, 3.0}, {19.0, 3.0}});
  CHECK(f2.slope == doctest::Approx(0.0).epsilon(1e-12));

  const RateFit f3 = fit_rate({{1.0, 2.0}, {4.0, 1.0}, {16.0, 0.5}});
  CHECK(f3.slope == doctest::Approx(-0.5).epsilon(1e-12));

  for (double planted : {-1.0, -0.5, 0.5}) {
    std::vector<std::pair<double, double>> pts;
    for (double s : {2.0, 8.0, 32.0, 128.0}) pts.push_back({s, 1.7 * std::pow(s, planted)});
    const RateFit f = fit_rate(pts);
    CHECK(f.slope == doctest::Approx(planted).epsilon(1e-10));
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("rate fit input validation") {
  CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {2.0, 0.5}}), DomainError);
  CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {1.0, 0.5}, {2.0, 0.2}}), DomainError);
  CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {2.0, -0.5}, {4.0, 0.2}}), DomainError);
}

TEST_CASE("rmse estimates carry delta-method standard errors") {
  const RmseEstimate est = rmse_from_squares({1.0, 4.0, 9.0, 16.0});
  CHECK(est.value == doctest::Approx(std::sqrt(7.5)).epsilon(1e-12));
  // sd of {1,4,9,16} = sqrt(130/3)/... computed directly:
  const double mean = 7.5;
  double var = 0.0;
  for (double v : {1.0, 4.0, 9.0, 16.0}) var += (v - mean) * (v - mean);
  var /= 3.0;
  const double want_se = std::sqrt(var / 4.0) / (2.0 * std::sqrt(mean));
  CHECK(est.se == doctest::Approx(want_se).epsilon(1e-12));

  Matrix samples(3, 1);
  samples << 0.0, 0.0, 3.0;
  const RmseEstimate e2 = rmse_to_point(samples, Vector::Zero(1));
  CHECK(e2.value == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("discretisation calibration is reproducible and sane") {
  const ModelSpec m = make_gaussian_model([] {
    GaussianHierarchicalParams p;
    p.y = Vector::Constant(1, 0.0);
    return p;
  }());

  auto make_cfg = [](double gamma) {
    RunConfig cfg;
    cfg.n_particles = 10;
    cfg.gamma = gamma;
    cfg.n_steps = static_cast<std::uint64_t>(std::llround(2.0 / gamma));
    cfg.seed = 11;
    cfg.replicates = 16;
    cfg.init.theta_mean = Vector::Constant(1, 2.0);
    cfg.init.x_mean = Vector::Constant(1, 0.0);
    return cfg;
  };
  const std::vector<RunConfig> grid = {make_cfg(0.02), make_cfg(0.01), make_cfg(0.005)};

  const DiscretizationCalibration cal = calibrate_discretization(m, grid, 5e-4, 2);
  CHECK(cal.constant > 0.0);
  CHECK(std::isfinite(cal.constant));
  REQUIRE(cal.points.size() == 3);
  // strong error shrinks with gamma
  CHECK(cal.points[0].rmse > cal.points[2].rmse);

  const DiscretizationCalibration again = calibrate_discretization(m, grid, 5e-4, 4);
  CHECK(again.constant == cal.constant);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.points[i].rmse == cal.points[i].rmse);

  // measured slope of error vs gamma at least 0.3 (theory: >= 0.5 scaling)
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : cal.points) pts.push_back({pt.gamma, pt.rmse});
  CHECK(fit_rate(pts).slope >= 0.3);
}

TEST_CASE("zero-noise calibration reduces to euler bias with slope near one") {
  const ModelSpec m = make_gaussian_model([] {
    GaussianHierarchicalParams p;
    p.y = Vector::Constant(1, 0.0);
    return p;
  }());
  auto make_cfg = [](double gamma) {
    RunConfig cfg;
    cfg.n_particles = 4;
    cfg.gamma = gamma;
    cfg.n_steps = static_cast<std::uint64_t>(std::llround(2.0 / gamma));
    cfg.seed = 21;
    cfg.replicates = 2;
    cfg.init.theta_mean = Vector::Constant(1, 3.0);
    cfg.init.x_mean = Vector::Constant(1, -1.0);
    return cfg;
  };
  const std::vector<RunConfig> grid = {make_cfg(0.02), make_cfg(0.01), make_cfg(0.005)};
  const DiscretizationCalibration cal =
      calibrate_discretization(m, grid, 1e-4, 1, /*live_noise=*/false);
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : cal.points) pts.push_back({pt.gamma, pt.rmse});
  const RateFit fit = fit_rate(pts);
  CHECK(fit.slope >= 0.5);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("calibration grid validation") {
  const ModelSpec m = make_gaussian_model([] {
    GaussianHierarchicalParams p;
    p.y = Vector::Constant(1, 0.0);
    return p;
  }());
  RunConfig a;
  a.n_particles = 4;
  a.gamma = 0.01;
  a.n_steps = 100;
  a.seed = 1;
  a.replicates = 2;
  RunConfig b = a;
  b.gamma = 0.02;
  b.n_steps = 100;  // wrong horizon
  CHECK_THROWS_AS(calibrate_discretization(m, {a, b}, 1e-4, 1), ConfigError);
  b.n_steps = 50;
  CHECK_NOTHROW(calibrate_discretization(m, {a, b}, 1e-4, 1));
  // reference not an integer divisor
  CHECK_THROWS_AS(calibrate_discretization(m, {a}, 3e-4, 1), ConfigError);
  // gamma outside the stability window
  RunConfig c = a;
  c.gamma = 0.4;
  c.n_steps = 10;
  RunConfig d = a;
  d.gamma = 0.5;
  d.n_steps = 8;
  CHECK_THROWS_AS(calibrate_discretization(m, {c, d}, 1e-4, 1), GammaOutOfRange);
}
