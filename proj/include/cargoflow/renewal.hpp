#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cargoflow/model.hpp"
#include "cargoflow/rng.hpp"
#include "cargoflow/spectral.hpp"

namespace cargoflow {

enum class SojournKind { Exponential, Gamma, Deterministic };

struct SojournDist {
  SojournKind kind = SojournKind::Exponential;
  double a = 1.0;  // Exponential/Gamma rate, or Deterministic duration
  double b = 1.0;  // Gamma shape (unused otherwise)

  static SojournDist exponential(double rate) {
    return {SojournKind::Exponential, rate, 1.0};
  }
  static SojournDist gamma(double shape, double rate) {
    return {SojournKind::Gamma, rate, shape};
  }
  static SojournDist deterministic(double duration) {
    return {SojournKind::Deterministic, duration, 1.0};
  }

  double mean() const;
  double sample(RngStream& rng) const;
};

/// Semi-Markov sojourn model: per-state holding-time distributions plus the
/// embedded jump chain, with a designated base state for regeneration.
struct SojournModel {
  std::vector<SojournDist> dists;
  Eigen::MatrixXd jump_probs;  // column-stochastic, "from" in columns
  int base_state = 0;
};

/// Exponential sojourns with rate -A[j][j] and jump probabilities from the
/// embedded chain. base_state < 0 picks the state with the largest stationary
/// probability (shortest expected cycles).
SojournModel sojourn_from_model(const ModelSpec& model, int base_state = -1);

/// Same embedded chain but Gamma(shape, shape * rate) holding times, which
/// preserve every mean sojourn; shape = 1 reduces to the exponential model.
SojournModel gamma_sojourn_from_model(const ModelSpec& model, double shape,
                                      int base_state = -1);

/// Displacement accrued over one sojourn of length tau in the given state:
/// c tau for advective states plus sqrt(2 d tau) Z for diffusive ones.
double step_displacement(int state, double sojourn, const ModelSpec& model,
                         RngStream& rng);

/// One regeneration cycle: duration, displacement, and number of steps.
struct CycleSample {
  double delta_t = 0;
  double delta_x = 0;
  std::uint64_t n_steps = 0;
};

struct SimOptions {
  std::uint64_t step_cap = 10'000'000;  // runaway-cycle guard
  int workers = 1;
};

/// Simulates independent regeneration cycles (entry into base_state to next
/// entry). Cycle i draws from the stream keyed (seed, i), so the sample
/// stream is bit-identical for any worker count.
std::vector<CycleSample> simulate_cycles(const SojournModel& sojourn,
                                         const ModelSpec& model,
                                         std::uint64_t n_cycles,
                                         std::uint64_t seed,
                                         const SimOptions& opts = {});

struct MomentTable {
  double mean_dt = 0, mean_dx = 0;
  double var_dt = 0, var_dx = 0, cov = 0;
  std::uint64_t n = 0;
};

struct RenewalEstimate {
  double v_eff = 0, sigma_eff = 0;
  double v_se = 0, sigma_se = 0;
  std::uint64_t n_cycles = 0;
  MomentTable moments;
  bool degenerate_dt_variance = false;

  EffectiveTransport as_effective() const {
    return {v_eff, sigma_eff, Method::renewal, v_se, sigma_se};
  }
};

/// Plug-in renewal-reward estimators: v = mean(dX)/mean(dT) and
/// sigma = (Var dX + v^2 Var dT - 2 v Cov) / (2 mean dT), with delta-method
/// standard errors over the cycle moment vector.
RenewalEstimate estimate_effective(std::span<const CycleSample> samples);

/// Bootstrap standard errors (resampling cycles with replacement); the point
/// estimates are identical to estimate_effective.
RenewalEstimate estimate_effective_bootstrap(std::span<const CycleSample> samples,
                                             int n_boot, std::uint64_t seed);

struct PathPoint {
  double t = 0;
  double x = 0;
  int state = 0;
};

/// Piecewise path sampled at jump times, truncated exactly at t_max. The
/// positions are exact at the recorded times; diffusive motion between them
/// is not interpolated.
std::vector<PathPoint> simulate_path(const SojournModel& sojourn,
                                     const ModelSpec& model, double t_max,
                                     std::uint64_t seed,
                                     std::uint64_t step_cap = 10'000'000);

}  // namespace cargoflow
