#include "cargoflow/frap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cargoflow/spectral.hpp"

namespace cargoflow {

GridSpec FrapProtocol::grid() const {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.x0 = domain.x0;
  g.y0 = domain.y0;
  g.dx = domain.width() / nx;
  g.dy = domain.height() / ny;
  return g;
}

double FrapProtocol::level_at(double r) const {
  if (r >= spot_radius) return 1.0;
  if (postbleach_profile.empty()) return 1.0 - bleach_depth;
  // linear interpolation on the measured radial samples; beyond the last
  // sample the level joins the plateau
  if (r <= postbleach_profile.front().first)
    return postbleach_profile.front().second;
  for (size_t k = 1; k < postbleach_profile.size(); ++k) {
    if (r <= postbleach_profile[k].first) {
      const auto& [r0, v0] = postbleach_profile[k - 1];
      const auto& [r1, v1] = postbleach_profile[k];
      double t = (r - r0) / (r1 - r0);
      return v0 + t * (v1 - v0);
    }
  }
  return 1.0;
}

void FrapProtocol::check() const {
  if (spot_radius <= 0) throw Error("frap: spot radius must be > 0");
  if (bleach_depth < 0 || bleach_depth >= 1)
    throw Error("frap: bleach depth must lie in [0,1)");
  if (!(spot_center.x - spot_radius >= domain.x0 &&
        spot_center.x + spot_radius <= domain.x1 &&
        spot_center.y - spot_radius >= domain.y0 &&
        spot_center.y + spot_radius <= domain.y1))
    throw Error("frap: bleach spot extends outside the domain");
  if (times.empty()) throw Error("frap: no observation times");
  for (size_t i = 0; i + 1 < times.size(); ++i)
    if (times[i + 1] <= times[i])
      throw Error("frap: observation times must be strictly increasing");
  if (times.front() < 0) throw Error("frap: negative observation time");
  if (nx <= 0 || ny <= 0) throw Error("frap: grid not set");
  for (const auto& [r, v] : postbleach_profile)
    if (v < 0) throw Error("frap: negative postbleach level");
}

namespace {

std::vector<int> spot_cells(const FrapProtocol& protocol) {
  GridSpec g = protocol.grid();
  std::vector<int> cells;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      double dx = g.cx(ix) - protocol.spot_center.x;
      double dy = g.cy(iy) - protocol.spot_center.y;
      if (dx * dx + dy * dy <= protocol.spot_radius * protocol.spot_radius)
        cells.push_back(g.index(ix, iy));
    }
  }
  if (cells.empty()) throw Error("frap: spot covers no grid cells");
  return cells;
}

}  // namespace

RecoveryCurve synthesize(const ModelSpec& model, const FrapProtocol& protocol,
                         int workers) {
  protocol.check();
  require_valid(model);
  GridSpec g = protocol.grid();
  Eigen::VectorXd pi = stationary_distribution(model).pi;

  StateFields fields = StateFields::zeros(g, model.n_states);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      double dx = g.cx(ix) - protocol.spot_center.x;
      double dy = g.cy(iy) - protocol.spot_center.y;
      double level = protocol.level_at(std::hypot(dx, dy));
      int idx = g.index(ix, iy);
      for (int j = 0; j < model.n_states; ++j)
        fields.u[j][idx] = pi(j) * level;
    }
  }

  auto cells = spot_cells(protocol);
  const double prebleach = static_cast<double>(cells.size());  // level 1 per cell
  auto spot_value = [&](const StateFields& f) {
    double acc = 0;
    for (int idx : cells)
      for (int j = 0; j < f.n_states; ++j) acc += f.u[j][idx];
    return acc / prebleach;
  };

  RecoveryCurve curve;
  curve.times = protocol.times;
  curve.values.reserve(protocol.times.size());

  SolverConfig cfg;
  cfg.workers = workers;
  cfg.t_end = protocol.times.back();
  Solver solver(model, g, cfg);
  const double base_dt = solver.auto_dt();

  size_t next = 0;
  if (protocol.times[0] == 0.0) {
    curve.values.push_back(spot_value(fields));
    next = 1;
  }
  double t = 0;
  while (next < protocol.times.size()) {
    double target = protocol.times[next];
    double dt = std::min(base_dt, target - t);
    if (t + dt >= target - 1e-14 * std::max(1.0, target)) {
      dt = target - t;
      solver.step(fields, dt);
      t = target;
      curve.values.push_back(spot_value(fields));
      ++next;
    } else {
      solver.step(fields, dt);
      t += dt;
    }
  }
  return curve;
}

double curve_objective(const RecoveryCurve& model_curve, const RecoveryCurve& data) {
  if (model_curve.values.size() != data.values.size())
    throw Error("curve_objective: length mismatch");
  double acc = 0;
  for (size_t i = 0; i < data.values.size(); ++i) {
    double w = data.weights.empty() ? 1.0 : data.weights[i];
    double r = model_curve.values[i] - data.values[i];
    acc += w * r * r;
  }
  return acc;
}

ModelTemplate ModelTemplate::two_state() {
  ModelTemplate t;
  t.param_names = {"d", "c", "beta1", "beta2"};
  t.make = [](const Eigen::VectorXd& p) {
    return ModelSpec::two_state(p(1), p(0), p(2), p(3));
  };
  return t;
}

ModelTemplate ModelTemplate::reaction_diffusion() {
  ModelTemplate t;
  t.param_names = {"d", "beta1", "beta2"};
  t.make = [](const Eigen::VectorXd& p) {
    return ModelSpec::two_state(0.0, p(0), p(1), p(2));
  };
  return t;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (lo <= 0 || hi <= lo || count < 2)
    throw Error("log_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> out(count);
  double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  return out;
}

std::vector<SweepRow> sweep(const RecoveryCurve& data, const FrapProtocol& protocol,
                            const ModelTemplate& tmpl,
                            const std::vector<std::vector<double>>& grids,
                            int workers) {
  if (grids.size() != tmpl.param_names.size())
    throw Error("sweep: grid count does not match template parameters");
  std::int64_t total = 1;
  for (const auto& g : grids) {
    if (g.empty()) throw Error("sweep: empty grid");
    total *= static_cast<std::int64_t>(g.size());
  }
  std::vector<SweepRow> rows(total);
  const int np = static_cast<int>(grids.size());
  parallel_for(total, workers, [&](std::int64_t flat) {
    Eigen::VectorXd p(np);
    std::int64_t rem = flat;
    for (int k = np - 1; k >= 0; --k) {
      p(k) = grids[k][rem % grids[k].size()];
      rem /= static_cast<std::int64_t>(grids[k].size());
    }
    SweepRow row;
    row.params = p;
    try {
      RecoveryCurve model_curve = synthesize(tmpl.make(p), protocol, 1);
      row.objective = curve_objective(model_curve, data);
    } catch (const std::exception& e) {
      row.objective = std::numeric_limits<double>::infinity();
      row.note = e.what();
    }
    rows[flat] = std::move(row);
  });
  return rows;
}

namespace {

std::vector<std::string> flat_valley_diagnostic(
    const std::vector<SweepRow>& ranked, const ModelTemplate& tmpl) {
  // Near-optimal set: objectives within 5% (plus a floor for noiseless data)
  // of the sweep minimum. A parameter is flat when its values in that set
  // span at least a decade.
  std::vector<std::string> flat;
  if (ranked.empty() || !std::isfinite(ranked.front().objective)) return flat;
  const double fmin = ranked.front().objective;
  const double cutoff = fmin * 1.05 + 1e-9;
  const int np = static_cast<int>(tmpl.param_names.size());
  for (int k = 0; k < np; ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& row : ranked) {
      if (row.objective > cutoff) continue;
      lo = std::min(lo, row.params(k));
      hi = std::max(hi, row.params(k));
    }
    if (hi > 0 && hi / lo >= 10.0) flat.push_back(tmpl.param_names[k]);
  }
  return flat;
}

}  // namespace

FitResult fit(const RecoveryCurve& data, const FrapProtocol& protocol,
              const ModelTemplate& tmpl, const std::vector<SweepRow>& sweep_table,
              const FitOptions& options) {
  std::vector<SweepRow> ranked = sweep_table;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return a.objective < b.objective;
                   });
  if (ranked.empty() || !std::isfinite(ranked.front().objective))
    throw Error("fit: sweep produced no finite objective");

  const int np = static_cast<int>(tmpl.param_names.size());
  const int n_starts = std::min<int>(options.top_k_starts,
                                     static_cast<int>(ranked.size()));

  auto log_objective = [&](const Eigen::VectorXd& logp) -> double {
    for (int k = 0; k < np; ++k)
      if (logp(k) < options.log_lo || logp(k) > options.log_hi)
        return std::numeric_limits<double>::infinity();
    Eigen::VectorXd p(np);
    for (int k = 0; k < np; ++k) p(k) = std::pow(10.0, logp(k));
    try {
      return curve_objective(synthesize(tmpl.make(p), protocol, 1), data);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.simplex_tolerance = options.simplex_tolerance;

  std::vector<NelderMeadResult> runs(n_starts);
  std::vector<std::string> failures(n_starts);
  parallel_for(n_starts, options.workers, [&](std::int64_t s) {
    Eigen::VectorXd logp(np);
    for (int k = 0; k < np; ++k) logp(k) = std::log10(ranked[s].params(k));
    runs[s] = nelder_mead(log_objective, logp, nm);
    if (!std::isfinite(runs[s].fx)) failures[s] = "no finite objective reached";
  });

  bool any_finite = false;
  for (const auto& r : runs) any_finite |= std::isfinite(r.fx);
  if (!any_finite) {
    std::ostringstream msg;
    msg << "fit: all " << n_starts << " starts failed:";
    for (int s = 0; s < n_starts; ++s) msg << " [start " << s << "] " << failures[s] << ";";
    throw Error(msg.str());
  }

  FitResult result;
  result.sweep_table = std::move(ranked);
  for (const auto& r : runs) {
    if (!std::isfinite(r.fx)) continue;
    Eigen::VectorXd p(np);
    for (int k = 0; k < np; ++k) p(k) = std::pow(10.0, r.x(k));
    // distinct optimum: log-distance above 1e-2 from every recorded one
    bool dup = false;
    for (const auto& opt : result.optima) {
      double dist = 0;
      for (int k = 0; k < np; ++k)
        dist = std::max(dist, std::abs(std::log10(opt.params(k)) - r.x(k)));
      if (dist < 1e-2) {
        dup = true;
        break;
      }
    }
    if (!dup) result.optima.push_back({p, r.fx, r.iterations, r.converged});
  }
  std::stable_sort(result.optima.begin(), result.optima.end(),
                   [](const LocalOptimum& a, const LocalOptimum& b) {
                     return a.objective < b.objective;
                   });
  result.params = result.optima.front().params;
  result.objective = result.optima.front().objective;
  result.converged = result.optima.front().converged;
  // descent history of the winning start
  for (const auto& r : runs) {
    if (std::isfinite(r.fx) && r.fx == result.objective) {
      result.descent_history = r.best_history;
      break;
    }
  }
  result.flat_params = flat_valley_diagnostic(result.sweep_table, tmpl);
  return result;
}

FitResult fit_from_start(const RecoveryCurve& data, const FrapProtocol& protocol,
                         const ModelTemplate& tmpl, const Eigen::VectorXd& start,
                         const FitOptions& options) {
  SweepRow row;
  row.params = start;
  try {
    row.objective = curve_objective(synthesize(tmpl.make(start), protocol, 1), data);
  } catch (const std::exception& e) {
    throw Error(std::string("fit_from_start: start point failed: ") + e.what());
  }
  FitOptions opts = options;
  opts.top_k_starts = 1;
  return fit(data, protocol, tmpl, {row}, opts);
}

DerivedQuantities derived_quantities(const ModelSpec& model) {
  require_valid(model);
  DerivedQuantities out;
  std::vector<int> bound = model.bound_states;
  if (bound.empty()) {
    for (int j = 0; j < model.n_states; ++j)
      if (model.speeds(j) != 0.0) bound.push_back(j);
  }
  for (int j : bound) {
    double exit = -model.rates(j, j);
    if (exit <= 0) continue;
    RunStatistic rs;
    rs.state = j;
    rs.label = j < static_cast<int>(model.state_labels.size())
                   ? model.state_labels[j]
                   : "state" + std::to_string(j);
    rs.run_time = 1.0 / exit;
    rs.run_length = model.speeds(j) / exit;
    out.runs.push_back(rs);
  }
  out.effective = effective_transport(model);
  return out;
}

}  // namespace cargoflow
