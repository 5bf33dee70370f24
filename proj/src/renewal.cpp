#include "cargoflow/renewal.hpp"

#include <cmath>
#include <sstream>

namespace cargoflow {

double SojournDist::mean() const {
  switch (kind) {
    case SojournKind::Exponential: return 1.0 / a;
    case SojournKind::Gamma: return b / a;
    case SojournKind::Deterministic: return a;
  }
  return 0;
}

double SojournDist::sample(RngStream& rng) const {
  switch (kind) {
    case SojournKind::Exponential: return rng.exponential(a);
    case SojournKind::Gamma: return rng.gamma(b, a);
    case SojournKind::Deterministic: return a;
  }
  return 0;
}

namespace {

void check_sojourn(const SojournModel& sm) {
  const int n = static_cast<int>(sm.dists.size());
  if (n == 0) throw ModelError("sojourn model has no states");
  if (sm.jump_probs.rows() != n || sm.jump_probs.cols() != n)
    throw ModelError("sojourn jump_probs shape mismatch");
  if (sm.base_state < 0 || sm.base_state >= n)
    throw ModelError("sojourn base_state out of range");
  for (const auto& d : sm.dists) {
    if (d.a <= 0 || d.b <= 0) throw ModelError("sojourn parameters must be > 0");
  }
  for (int j = 0; j < n; ++j) {
    double s = sm.jump_probs.col(j).sum();
    if (std::abs(s - 1.0) > 1e-10)
      throw ModelError("sojourn jump_probs column does not sum to 1");
  }
}

int sample_jump(const Eigen::MatrixXd& P, int from, RngStream& rng) {
  const int n = static_cast<int>(P.rows());
  double u = rng.uniform();
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    acc += P(i, from);
    if (u <= acc) return i;
  }
  return n - 1;  // guard against rounding at u ~ 1
}

int default_base_state(const ModelSpec& model) {
  Eigen::VectorXd pi = stationary_distribution(model).pi;
  int best = 0;
  pi.maxCoeff(&best);
  return best;
}

}  // namespace

SojournModel sojourn_from_model(const ModelSpec& model, int base_state) {
  EmbeddedChain chain = embedded_chain(model);
  SojournModel sm;
  sm.jump_probs = chain.jump_probs;
  sm.dists.reserve(model.n_states);
  for (int j = 0; j < model.n_states; ++j) {
    sm.dists.push_back(SojournDist::exponential(chain.exit_rates(j)));
  }
  sm.base_state = base_state < 0 ? default_base_state(model) : base_state;
  check_sojourn(sm);
  return sm;
}

SojournModel gamma_sojourn_from_model(const ModelSpec& model, double shape,
                                      int base_state) {
  if (shape <= 0) throw ModelError("gamma sojourn shape must be > 0");
  SojournModel sm = sojourn_from_model(model, base_state);
  for (auto& d : sm.dists) {
    d = SojournDist::gamma(shape, shape * d.a);  // same mean 1/rate
  }
  return sm;
}

double step_displacement(int state, double sojourn, const ModelSpec& model,
                         RngStream& rng) {
  const double c = model.speeds(state);
  const double d = model.diffusivities(state);
  double dx = c * sojourn;
  if (d > 0) dx += std::sqrt(2.0 * d * sojourn) * rng.normal();
  return dx;
}

namespace {

CycleSample run_cycle(const SojournModel& sm, const ModelSpec& model,
                      RngStream& rng, std::uint64_t step_cap) {
  CycleSample cs;
  int state = sm.base_state;
  do {
    double tau = sm.dists[state].sample(rng);
    cs.delta_t += tau;
    cs.delta_x += step_displacement(state, tau, model, rng);
    ++cs.n_steps;
    if (cs.n_steps > step_cap) {
      std::ostringstream msg;
      msg << "runaway cycle: exceeded " << step_cap
          << " steps without returning to base state " << sm.base_state;
      throw SolverError(msg.str());
    }
    state = sample_jump(sm.jump_probs, state, rng);
  } while (state != sm.base_state);
  return cs;
}

}  // namespace

std::vector<CycleSample> simulate_cycles(const SojournModel& sojourn,
                                         const ModelSpec& model,
                                         std::uint64_t n_cycles,
                                         std::uint64_t seed,
                                         const SimOptions& opts) {
  check_sojourn(sojourn);
  require_valid(model);
  if (n_cycles < 1) throw Error("simulate_cycles: n_cycles must be >= 1");
  std::vector<CycleSample> out(n_cycles);
  parallel_for(static_cast<std::int64_t>(n_cycles), opts.workers,
               [&](std::int64_t i) {
                 RngStream rng(seed, static_cast<std::uint64_t>(i));
                 out[i] = run_cycle(sojourn, model, rng, opts.step_cap);
               });
  return out;
}

namespace {

// sigma_eff as a function of the raw moment vector (mx, mt, mxx, mtt, mxt).
double sigma_of_moments(const double m[5]) {
  const double v = m[0] / m[1];
  const double var_x = m[2] - m[0] * m[0];
  const double var_t = m[3] - m[1] * m[1];
  const double cov = m[4] - m[0] * m[1];
  return (var_x + v * v * var_t - 2.0 * v * cov) / (2.0 * m[1]);
}

}  // namespace

RenewalEstimate estimate_effective(std::span<const CycleSample> samples) {
  const std::uint64_t n = samples.size();
  if (n < 2) throw Error("estimate_effective: need at least 2 cycles");

  // Two-pass raw moments in fixed index order.
  double mx = 0, mt = 0;
  for (const auto& s : samples) {
    mx += s.delta_x;
    mt += s.delta_t;
  }
  mx /= static_cast<double>(n);
  mt /= static_cast<double>(n);
  double sxx = 0, stt = 0, sxt = 0;
  for (const auto& s : samples) {
    const double ex = s.delta_x - mx;
    const double et = s.delta_t - mt;
    sxx += ex * ex;
    stt += et * et;
    sxt += ex * et;
  }
  const double nf = static_cast<double>(n);
  RenewalEstimate est;
  est.n_cycles = n;
  est.moments = {mt, mx, stt / (nf - 1), sxx / (nf - 1), sxt / (nf - 1), n};
  est.degenerate_dt_variance = est.moments.var_dt == 0.0;

  est.v_eff = mx / mt;
  est.sigma_eff = (est.moments.var_dx + est.v_eff * est.v_eff * est.moments.var_dt -
                   2.0 * est.v_eff * est.moments.cov) /
                  (2.0 * mt);

  // Delta method. For v = mx/mt the linearization gives
  // Var(v) = Var(dX - v dT) / (n mt^2) = 2 sigma / (n mt).
  est.v_se = std::sqrt(std::max(0.0, 2.0 * est.sigma_eff / (nf * mt)));

  // For sigma, propagate the sample covariance of the per-cycle statistic
  // vector w = (x, t, x^2, t^2, xt) through the moment map numerically.
  double m[5] = {mx, mt, 0, 0, 0};
  double cov5[5][5] = {};
  {
    double mean5[5] = {mx, mt, 0, 0, 0};
    for (const auto& s : samples) {
      mean5[2] += s.delta_x * s.delta_x;
      mean5[3] += s.delta_t * s.delta_t;
      mean5[4] += s.delta_x * s.delta_t;
    }
    mean5[2] /= nf;
    mean5[3] /= nf;
    mean5[4] /= nf;
    for (const auto& s : samples) {
      const double w[5] = {s.delta_x, s.delta_t, s.delta_x * s.delta_x,
                           s.delta_t * s.delta_t, s.delta_x * s.delta_t};
      for (int a = 0; a < 5; ++a)
        for (int b = a; b < 5; ++b)
          cov5[a][b] += (w[a] - mean5[a]) * (w[b] - mean5[b]);
    }
    for (int a = 0; a < 5; ++a)
      for (int b = a; b < 5; ++b) {
        cov5[a][b] /= (nf - 1);
        cov5[b][a] = cov5[a][b];
      }
    m[2] = mean5[2];
    m[3] = mean5[3];
    m[4] = mean5[4];
  }
  double grad[5];
  for (int k = 0; k < 5; ++k) {
    const double h = std::max(std::abs(m[k]), 1e-12) * 1e-6;
    double mp[5], mm[5];
    for (int j = 0; j < 5; ++j) mp[j] = mm[j] = m[j];
    mp[k] += h;
    mm[k] -= h;
    grad[k] = (sigma_of_moments(mp) - sigma_of_moments(mm)) / (2.0 * h);
  }
  double var_sigma = 0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) var_sigma += grad[a] * cov5[a][b] * grad[b];
  est.sigma_se = std::sqrt(std::max(0.0, var_sigma / nf));
  return est;
}

RenewalEstimate estimate_effective_bootstrap(std::span<const CycleSample> samples,
                                             int n_boot, std::uint64_t seed) {
  RenewalEstimate est = estimate_effective(samples);
  if (n_boot < 2) throw Error("bootstrap: need at least 2 replicates");
  const std::uint64_t n = samples.size();
  std::vector<double> vs(n_boot), ss(n_boot);
  parallel_for(n_boot, 1, [&](std::int64_t b) {
    RngStream rng(seed, 0x626f6f74ULL + static_cast<std::uint64_t>(b));
    double sx = 0, st = 0;
    std::vector<CycleSample> re(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto& s = samples[static_cast<std::size_t>(rng.uniform() * n) % n];
      re[i] = s;
      sx += s.delta_x;
      st += s.delta_t;
    }
    RenewalEstimate r = estimate_effective(re);
    vs[b] = r.v_eff;
    ss[b] = r.sigma_eff;
  });
  auto sd = [&](const std::vector<double>& x) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= x.size();
    double acc = 0;
    for (double v : x) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / (x.size() - 1));
  };
  est.v_se = sd(vs);
  est.sigma_se = sd(ss);
  return est;
}

std::vector<PathPoint> simulate_path(const SojournModel& sojourn,
                                     const ModelSpec& model, double t_max,
                                     std::uint64_t seed,
                                     std::uint64_t step_cap) {
  check_sojourn(sojourn);
  if (t_max <= 0) throw Error("simulate_path: t_max must be > 0");
  RngStream rng(seed, 0);
  std::vector<PathPoint> path;
  int state = sojourn.base_state;
  double t = 0, x = 0;
  path.push_back({t, x, state});
  std::uint64_t steps = 0;
  while (t < t_max) {
    double tau = sojourn.dists[state].sample(rng);
    if (t + tau >= t_max) {
      // Exact truncation: the displacement law over the partial sojourn.
      double partial = t_max - t;
      x += step_displacement(state, partial, model, rng);
      path.push_back({t_max, x, state});
      break;
    }
    t += tau;
    x += step_displacement(state, tau, model, rng);
    state = sample_jump(sojourn.jump_probs, state, rng);
    path.push_back({t, x, state});
    if (++steps > step_cap) throw SolverError("simulate_path: step cap exceeded");
  }
  return path;
}

}  // namespace cargoflow
