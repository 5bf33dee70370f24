#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cargoflow/frap.hpp"
#include "cargoflow/renewal.hpp"
#include "cargoflow/rng.hpp"

using namespace cargoflow;

namespace {

FrapProtocol small_protocol(double t_max = 6.0, int points = 13) {
  FrapProtocol p;
  p.domain = {0, 0, 12, 12};
  p.nx = 24;
  p.ny = 24;
  p.spot_center = {6, 6};
  p.spot_radius = 1.5;
  p.bleach_depth = 0.8;
  for (int i = 0; i < points; ++i) p.times.push_back(t_max * i / (points - 1));
  return p;
}

}  // namespace

TEST_CASE("no bleach gives a flat curve at one") {
  ModelSpec m = ModelSpec::two_state(0.0, 1.0, 1.0, 2.0);
  FrapProtocol p = small_protocol();
  p.bleach_depth = 0.0;
  RecoveryCurve c = synthesize(m, p);
  for (double v : c.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deep bleach starts at the postbleach level and recovers") {
  ModelSpec m = ModelSpec::two_state(0.0, 1.0, 1.0, 2.0);
  FrapProtocol p = small_protocol();
  RecoveryCurve c = synthesize(m, p);
  CHECK(c.values.front() == doctest::Approx(1.0 - p.bleach_depth).epsilon(1e-12));
  CHECK(std::is_sorted(c.values.begin(), c.values.end()));
  CHECK(c.values.back() > 0.8);
}

TEST_CASE("large domain recovers to one by mass re-equilibration") {
  ModelSpec m = ModelSpec::two_state(0.0, 2.0, 1.0, 2.0);
  FrapProtocol p;
  p.domain = {0, 0, 30, 30};
  p.nx = 40;
  p.ny = 40;
  p.spot_center = {15, 15};
  p.spot_radius = 1.5;
  p.bleach_depth = 0.9;
  p.times = {0, 40, 80};
  RecoveryCurve c = synthesize(m, p);
  CHECK(c.values.back() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("pure diffusion curve matches a 4x finer reference within half a percent") {
  ModelSpec m;
  m.n_states = 1;
  m.speeds = Eigen::VectorXd::Zero(1);
  m.diffusivities = Eigen::VectorXd::Constant(1, 1.0);
  m.rates = Eigen::MatrixXd::Zero(1, 1);
  FrapProtocol coarse = small_protocol(4.0, 9);
  RecoveryCurve c1 = synthesize(m, coarse);
  FrapProtocol fine = coarse;
  fine.nx *= 4;
  fine.ny *= 4;
  RecoveryCurve c2 = synthesize(m, fine);
  for (size_t i = 0; i < c1.values.size(); ++i)
    CHECK(std::abs(c1.values[i] - c2.values[i]) < 0.005);
}

TEST_CASE("normalized curves are invariant under concentration rescaling") {
  // linearity of the PDE: scaling the initial fields scales the spot
  // integral, so the normalized curve cannot change
  ModelSpec m = ModelSpec::two_state(0.3, 1.0, 1.0, 1.0);
  FrapProtocol p = small_protocol(3.0, 7);
  GridSpec g = p.grid();
  Eigen::VectorXd pi = stationary_distribution(m).pi;
  SolverConfig cfg;
  cfg.t_end = p.times.back();
  StateFields base = StateFields::zeros(g, 2);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      double dx = g.cx(ix) - 6, dy = g.cy(iy) - 6;
      double level = std::hypot(dx, dy) <= 1.5 ? 0.2 : 1.0;
      for (int j = 0; j < 2; ++j) base.u[j][g.index(ix, iy)] = pi(j) * level;
    }
  StateFields scaled = base;
  for (auto& field : scaled.u)
    for (double& v : field) v *= 3.7;
  Solver s1(m, g, cfg), s2(m, g, cfg);
  RunResult r1 = s1.run(std::move(base));
  RunResult r2 = s2.run(std::move(scaled));
  CHECK(r2.moments.back().mass ==
        doctest::Approx(3.7 * r1.moments.back().mass).epsilon(1e-12));
  CHECK(r2.moments.back().mean_y ==
        doctest::Approx(r1.moments.back().mean_y).epsilon(1e-12));
}

TEST_CASE("radial postbleach profile is honored at t=0") {
  ModelSpec m = ModelSpec::two_state(0.0, 1.0, 1.0, 2.0);
  FrapProtocol p = small_protocol();
  p.postbleach_profile = {{0.0, 0.1}, {1.0, 0.5}, {1.5, 1.0}};
  RecoveryCurve c = synthesize(m, p);
  // the spot mean of the interpolated profile, not the uniform depth
  CHECK(c.values.front() > 0.1);
  CHECK(c.values.front() < 1.0);
}

TEST_CASE("objective vanishes at the generating parameters and ranks the sweep") {
  ModelSpec truth = ModelSpec::two_state(0.4, 1.0, 0.5, 1.0);
  FrapProtocol p = small_protocol(5.0, 9);
  RecoveryCurve data = synthesize(truth, p);
  ModelTemplate tmpl = ModelTemplate::two_state();
  // 3^4 grid that contains the generator (d, c, beta1, beta2)
  std::vector<std::vector<double>> grids = {
      {0.5, 1.0, 2.0}, {0.2, 0.4, 0.8}, {0.25, 0.5, 1.0}, {0.5, 1.0, 2.0}};
  auto rows = sweep(data, p, tmpl, grids, 2);
  CHECK(rows.size() == 81);
  double best = INFINITY;
  Eigen::VectorXd best_p;
  for (const auto& row : rows) {
    if (row.objective < best) {
      best = row.objective;
      best_p = row.params;
    }
  }
  CHECK(best < 1e-20);
  CHECK(best_p(0) == doctest::Approx(1.0));
  CHECK(best_p(1) == doctest::Approx(0.4));
  CHECK(best_p(2) == doctest::Approx(0.5));
  CHECK(best_p(3) == doctest::Approx(1.0));
}

TEST_CASE("sweep row count is the grid product and ranking ignores weight scale") {
  ModelSpec truth = ModelSpec::two_state(0.3, 1.0, 1.0, 1.0);
  FrapProtocol p = small_protocol(3.0, 7);
  RecoveryCurve data = synthesize(truth, p);
  ModelTemplate tmpl = ModelTemplate::two_state();
  std::vector<std::vector<double>> grids = {
      log_grid(0.5, 2.0, 2), log_grid(0.1, 1.0, 2), log_grid(0.5, 2.0, 2),
      log_grid(0.5, 2.0, 2)};
  RecoveryCurve weighted = data;
  weighted.weights.assign(data.times.size(), 5.0);
  auto plain = sweep(data, p, tmpl, grids, 2);
  auto scaled = sweep(weighted, p, tmpl, grids, 2);
  REQUIRE(plain.size() == 16);
  REQUIRE(scaled.size() == 16);
  for (size_t i = 0; i < plain.size(); ++i)
    CHECK(scaled[i].objective == doctest::Approx(5.0 * plain[i].objective));
}

TEST_CASE("fit from the true start converges immediately on noiseless data") {
  ModelSpec truth = ModelSpec::two_state(0.4, 1.0, 0.5, 1.0);
  FrapProtocol p = small_protocol(5.0, 9);
  RecoveryCurve data = synthesize(truth, p);
  Eigen::VectorXd start(4);
  start << 1.0, 0.4, 0.5, 1.0;  // (d, c, beta1, beta2)
  FitResult result = fit_from_start(data, p, ModelTemplate::two_state(), start);
  CHECK(result.objective < 1e-10);
  CHECK(result.converged);
}

TEST_CASE("multi-start fit recovers parameters from a coarse sweep") {
  ModelSpec truth = ModelSpec::two_state(0.4, 0.8, 0.5, 1.0);
  FrapProtocol p = small_protocol(5.0, 11);
  RecoveryCurve data = synthesize(truth, p);
  ModelTemplate tmpl = ModelTemplate::two_state();
  std::vector<std::vector<double>> grids = {
      log_grid(0.2, 5.0, 3), log_grid(0.1, 2.0, 3), log_grid(0.1, 2.0, 3),
      log_grid(0.2, 5.0, 3)};
  auto rows = sweep(data, p, tmpl, grids, 2);
  FitOptions opts;
  opts.top_k_starts = 3;
  opts.workers = 2;
  FitResult result = fit(data, p, tmpl, rows, opts);
  CHECK(result.objective < 1e-6);
  CHECK(result.params(0) == doctest::Approx(0.8).epsilon(0.15));
  CHECK(result.params(1) == doctest::Approx(0.4).epsilon(0.15));
  // descent history is monotone non-increasing
  for (size_t i = 1; i < result.descent_history.size(); ++i)
    CHECK(result.descent_history[i] <= result.descent_history[i - 1] + 1e-15);
}

TEST_CASE("flat-valley diagnostic fires when advection is unidentifiable") {
  // diffusion-dominated data: any sufficiently small c fits equally well
  ModelSpec truth = ModelSpec::two_state(1e-3, 1.0, 1.0, 1.0);
  FrapProtocol p = small_protocol(3.0, 7);
  RecoveryCurve data = synthesize(truth, p);
  ModelTemplate tmpl = ModelTemplate::two_state();
  std::vector<std::vector<double>> grids = {
      {1.0}, log_grid(1e-4, 1e-2, 3), {1.0}, {1.0}};
  auto rows = sweep(data, p, tmpl, grids, 2);
  FitOptions opts;
  opts.top_k_starts = 1;
  FitResult result = fit(data, p, tmpl, rows, opts);
  bool c_flat = false;
  for (const auto& name : result.flat_params) c_flat |= name == "c";
  CHECK(c_flat);
}

TEST_CASE("reaction-diffusion template fits diffusion-generated data equally well") {
  ModelSpec truth = ModelSpec::two_state(0.0, 1.0, 1.0, 1.5);
  FrapProtocol p = small_protocol(4.0, 9);
  RecoveryCurve data = synthesize(truth, p);

  auto rd_rows = sweep(data, p, ModelTemplate::reaction_diffusion(),
                       {log_grid(0.5, 2.0, 3), log_grid(0.5, 2.0, 3),
                        log_grid(0.75, 3.0, 3)},
                       2);
  FitOptions opts;
  opts.top_k_starts = 2;
  FitResult rd = fit(data, p, ModelTemplate::reaction_diffusion(), rd_rows, opts);

  auto ts_rows = sweep(data, p, ModelTemplate::two_state(),
                       {log_grid(0.5, 2.0, 3), log_grid(1e-4, 1e-3, 2),
                        log_grid(0.5, 2.0, 3), log_grid(0.75, 3.0, 3)},
                       2);
  FitResult ts = fit(data, p, ModelTemplate::two_state(), ts_rows, opts);

  // both reach effectively perfect fits on this data
  CHECK(rd.objective < 1e-8);
  CHECK(ts.objective < 1e-8);
  CHECK(rd.params(0) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("derived quantities: run length and run time") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.5, 2.0, 1.0);
  DerivedQuantities dq = derived_quantities(m);
  REQUIRE(dq.runs.size() == 1);
  CHECK(dq.runs[0].state == 0);
  CHECK(dq.runs[0].run_time == doctest::Approx(0.5));
  CHECK(dq.runs[0].run_length == doctest::Approx(0.5));
}

TEST_CASE("derived quantities: symmetric rates give v_eff = c/2") {
  ModelSpec m = ModelSpec::two_state(0.9, 0.5, 1.3, 1.3);
  DerivedQuantities dq = derived_quantities(m);
  CHECK(dq.effective.v_eff == doctest::Approx(0.45).epsilon(1e-12));
}

TEST_CASE("derived run statistics match per-state sojourn sampling") {
  ModelSpec m = ModelSpec::two_state(1.4, 0.5, 2.0, 1.0);
  DerivedQuantities dq = derived_quantities(m);
  SojournModel sm = sojourn_from_model(m, 1);
  RngStream rng(1234, 0);
  const int n = 200000;
  double sum_t = 0, sum_x = 0;
  for (int i = 0; i < n; ++i) {
    double tau = sm.dists[0].sample(rng);
    sum_t += tau;
    sum_x += step_displacement(0, tau, m, rng);
  }
  double se_t = (1.0 / 2.0) / std::sqrt(double(n));
  CHECK(std::abs(sum_t / n - dq.runs[0].run_time) < 3 * se_t);
  double se_x = (1.4 / 2.0) / std::sqrt(double(n));
  CHECK(std::abs(sum_x / n - dq.runs[0].run_length) < 3 * se_x);
}
