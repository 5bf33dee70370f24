#include "cargoflow/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace cargoflow {

StateFields StateFields::zeros(const GridSpec& grid, int n_states) {
  StateFields f;
  f.grid = grid;
  f.n_states = n_states;
  f.u.assign(n_states, std::vector<double>(grid.cells(), 0.0));
  return f;
}

double StateFields::total_mass() const {
  double sum = 0, comp = 0;  // Kahan
  for (const auto& field : u) {
    for (double v : field) {
      double y = v - comp;
      double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
  }
  return sum * grid.dx * grid.dy;
}

void deposit_gaussian(StateFields& fields, const Eigen::VectorXd& weights,
                      double cx, double cy, double sigma, double mass) {
  const GridSpec& g = fields.grid;
  if (weights.size() != fields.n_states)
    throw Error("deposit_gaussian: weights size mismatch");
  std::vector<double> blob(g.cells());
  double sum = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      double dx = g.cx(ix) - cx, dy = g.cy(iy) - cy;
      double v = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      blob[g.index(ix, iy)] = v;
      sum += v;
    }
  }
  if (sum <= 0) throw Error("deposit_gaussian: blob does not overlap the grid");
  const double cell_area = g.dx * g.dy;
  for (int j = 0; j < fields.n_states; ++j) {
    double w = weights(j) * mass / (sum * cell_area);
    for (int i = 0; i < g.cells(); ++i) fields.u[j][i] += w * blob[i];
  }
}

void deposit_delta(StateFields& fields, const Eigen::VectorXd& weights,
                   double cx, double cy, double mass) {
  const GridSpec& g = fields.grid;
  if (weights.size() != fields.n_states)
    throw Error("deposit_delta: weights size mismatch");
  int ix = std::clamp(static_cast<int>(std::floor((cx - g.x0) / g.dx)), 0, g.nx - 1);
  int iy = std::clamp(static_cast<int>(std::floor((cy - g.y0) / g.dy)), 0, g.ny - 1);
  for (int j = 0; j < fields.n_states; ++j)
    fields.u[j][g.index(ix, iy)] += weights(j) * mass / (g.dx * g.dy);
}

void deposit_uniform(StateFields& fields, const Eigen::VectorXd& weights,
                     double level) {
  if (weights.size() != fields.n_states)
    throw Error("deposit_uniform: weights size mismatch");
  for (int j = 0; j < fields.n_states; ++j)
    for (double& v : fields.u[j]) v += weights(j) * level;
}

Moments moments(const StateFields& fields) {
  const GridSpec& g = fields.grid;
  double m0 = 0, m1 = 0, m2 = 0;
  double c0 = 0, c1 = 0, c2 = 0;  // Kahan compensations
  auto add = [](double& sum, double& comp, double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  for (int j = 0; j < fields.n_states; ++j) {
    const double* u = fields.u[j].data();
    for (int iy = 0; iy < g.ny; ++iy) {
      const double y = g.cy(iy);
      double row = 0;
      for (int ix = 0; ix < g.nx; ++ix) row += u[iy * g.nx + ix];
      add(m0, c0, row);
      add(m1, c1, row * y);
      add(m2, c2, row * y * y);
    }
  }
  const double area = g.dx * g.dy;
  Moments out;
  out.mass = m0 * area;
  if (out.mass <= 0) throw SolverError("moments: total mass is not positive");
  out.mean_y = m1 / m0;
  out.var_y = m2 / m0 - out.mean_y * out.mean_y;
  return out;
}

namespace {

void check_solver_model(const ModelSpec& m) {
  const int n = m.n_states;
  if (n <= 0) throw ModelError("solver: n_states must be positive");
  if (m.speeds.size() != n || m.diffusivities.size() != n ||
      m.rates.rows() != n || m.rates.cols() != n)
    throw ModelError("solver: model shape mismatch");
  const double scale = std::max(1.0, m.rates.cwiseAbs().maxCoeff());
  for (int j = 0; j < n; ++j) {
    if (std::abs(m.rates.col(j).sum()) > 1e-10 * scale)
      throw ModelError("solver: rate matrix is not conservative");
    for (int i = 0; i < n; ++i)
      if (i != j && m.rates(i, j) < 0)
        throw ModelError("solver: negative off-diagonal rate");
    if (m.diffusivities(j) < 0) throw ModelError("solver: negative diffusivity");
  }
}

}  // namespace

Solver::Solver(ModelSpec model, GridSpec grid, SolverConfig config)
    : model_(std::move(model)), grid_(grid), config_(std::move(config)) {
  check_solver_model(model_);
  if (grid_.nx <= 0 || grid_.ny <= 0 || grid_.dx <= 0 || grid_.dy <= 0)
    throw SolverError("solver: invalid grid");
}

Solver::Solver(ModelSpec model, SpatialRates rates, bool advect_along_network,
               SolverConfig config)
    : model_(std::move(model)),
      grid_(rates.field.grid),
      config_(std::move(config)),
      spatial_(std::move(rates)),
      advect_network_(advect_along_network) {
  check_solver_model(model_);
  if (grid_.nx <= 0 || grid_.ny <= 0 || grid_.dx <= 0 || grid_.dy <= 0)
    throw SolverError("solver: invalid grid");
  cell_level_.resize(grid_.cells());
  for (int i = 0; i < grid_.cells(); ++i) {
    double rho = spatial_->field.rho[i];
    cell_level_[i] =
        static_cast<int>(std::lround(std::clamp(rho, 0.0, 1.0) * (kRhoLevels - 1)));
  }
}

double Solver::auto_dt() const {
  const double h = std::min(grid_.dx, grid_.dy);
  const double d_max = model_.diffusivities.maxCoeff();
  const double c_max = model_.speeds.cwiseAbs().maxCoeff();
  double dt = std::numeric_limits<double>::infinity();
  if (d_max > 0) dt = std::min(dt, h * h / (4.0 * d_max));
  if (c_max > 0) dt = std::min(dt, h / c_max);
  if (!std::isfinite(dt)) {
    // reaction only: the exponential propagator is exact for any dt
    dt = config_.t_end > 0 ? config_.t_end : 1.0;
  }
  return config_.safety * dt;
}

void Solver::advect(const StateFields& in, StateFields& out, double dt) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const double fdx = dt / grid_.dx, fdy = dt / grid_.dy;
  const NetworkField* net = advect_network_ ? &spatial_->field : nullptr;

  for (int j = 0; j < model_.n_states; ++j) {
    const double c = model_.speeds(j);
    const double* __restrict src = in.u[j].data();
    double* __restrict dst = out.u[j].data();
    if (c == 0.0) {
      std::copy(src, src + grid_.cells(), dst);
      continue;
    }
    parallel_for(ny, config_.workers, [&](std::int64_t iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const int idx = static_cast<int>(iy) * nx + ix;
        double unew = src[idx];
        if (net) {
          // x-direction faces
          auto vel_x = [&](int i) {
            return c * net->polarity[i] * net->dir_x[i];
          };
          double q_e = 0, q_w = 0;
          if (ix + 1 < nx) {
            double v = 0.5 * (vel_x(idx) + vel_x(idx + 1));
            q_e = v >= 0 ? v * src[idx] : v * src[idx + 1];
          }
          if (ix > 0) {
            double v = 0.5 * (vel_x(idx - 1) + vel_x(idx));
            q_w = v >= 0 ? v * src[idx - 1] : v * src[idx];
          }
          unew -= fdx * (q_e - q_w);
          // y-direction faces
          auto vel_y = [&](int i) {
            return c * net->polarity[i] * net->dir_y[i];
          };
          double q_n = 0, q_s = 0;
          if (iy + 1 < ny) {
            double v = 0.5 * (vel_y(idx) + vel_y(idx + nx));
            q_n = v >= 0 ? v * src[idx] : v * src[idx + nx];
          }
          if (iy > 0) {
            double v = 0.5 * (vel_y(idx - nx) + vel_y(idx));
            q_s = v >= 0 ? v * src[idx - nx] : v * src[idx];
          }
          unew -= fdy * (q_n - q_s);
        } else {
          // constant axis: velocity -c along y
          const double v = -c;
          double q_n = 0, q_s = 0;
          if (iy + 1 < ny) q_n = v >= 0 ? v * src[idx] : v * src[idx + nx];
          if (iy > 0) q_s = v >= 0 ? v * src[idx - nx] : v * src[idx];
          unew -= fdy * (q_n - q_s);
        }
        dst[idx] = unew;
      }
    });
  }
}

void Solver::diffuse(const StateFields& in, StateFields& out, double dt) const {
  const int nx = grid_.nx, ny = grid_.ny;
  const double ax = dt / (grid_.dx * grid_.dx);
  const double ay = dt / (grid_.dy * grid_.dy);
  for (int j = 0; j < model_.n_states; ++j) {
    const double d = model_.diffusivities(j);
    const double* __restrict src = in.u[j].data();
    double* __restrict dst = out.u[j].data();
    if (d == 0.0) {
      std::copy(src, src + grid_.cells(), dst);
      continue;
    }
    const double dax = d * ax, day = d * ay;
    parallel_for(ny, config_.workers, [&](std::int64_t iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const int idx = static_cast<int>(iy) * nx + ix;
        const double u0 = src[idx];
        double acc = u0;
        if (ix + 1 < nx) acc += dax * (src[idx + 1] - u0);
        if (ix > 0) acc += dax * (src[idx - 1] - u0);
        if (iy + 1 < ny) acc += day * (src[idx + nx] - u0);
        if (iy > 0) acc += day * (src[idx - nx] - u0);
        dst[idx] = acc;
      }
    });
  }
}

void Solver::build_propagators(double dt) {
  props_.clear();
  if (spatial_) {
    std::vector<char> present(kRhoLevels, 0);
    for (int lvl : cell_level_) present[lvl] = 1;
    for (int lvl = 0; lvl < kRhoLevels; ++lvl) {
      if (!present[lvl]) continue;
      double rho = static_cast<double>(lvl) / (kRhoLevels - 1);
      Eigen::MatrixXd A =
          modulate_rates(spatial_->model, rho, spatial_->binding_states);
      props_[lvl] = (A * dt).exp();
    }
  } else {
    props_[0] = (model_.rates * dt).exp();
  }
  props_dt_ = dt;
}

void Solver::react(StateFields& fields, double dt) {
  if (dt != props_dt_) build_propagators(dt);
  const int n = model_.n_states;
  if (n == 1) return;  // conservative 1x1 generator is zero
  const int nx = grid_.nx, ny = grid_.ny;

  std::vector<double*> u(n);
  for (int j = 0; j < n; ++j) u[j] = fields.u[j].data();

  if (!spatial_) {
    const Eigen::MatrixXd& E = props_.at(0);
    parallel_for(ny, config_.workers, [&](std::int64_t iy) {
      std::vector<double> tmp(n);
      for (int ix = 0; ix < nx; ++ix) {
        const int idx = static_cast<int>(iy) * nx + ix;
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (int j = 0; j < n; ++j) acc += E(i, j) * u[j][idx];
          tmp[i] = acc;
        }
        for (int i = 0; i < n; ++i) u[i][idx] = tmp[i];
      }
    });
  } else {
    parallel_for(ny, config_.workers, [&](std::int64_t iy) {
      std::vector<double> tmp(n);
      for (int ix = 0; ix < nx; ++ix) {
        const int idx = static_cast<int>(iy) * nx + ix;
        const Eigen::MatrixXd& E = props_.at(cell_level_[idx]);
        for (int i = 0; i < n; ++i) {
          double acc = 0;
          for (int j = 0; j < n; ++j) acc += E(i, j) * u[j][idx];
          tmp[i] = acc;
        }
        for (int i = 0; i < n; ++i) u[i][idx] = tmp[i];
      }
    });
  }
}

void Solver::clip_negative(StateFields& fields) {
  double scale = 0;
  for (const auto& f : fields.u)
    for (double v : f) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * std::max(1.0, scale);
  for (auto& f : fields.u) {
    for (double& v : f) {
      if (v < 0) {
        if (v < -tol) {
          std::ostringstream msg;
          msg << "negative concentration " << v << " beyond tolerance " << -tol;
          throw SolverError(msg.str());
        }
        v = 0;
        ++clipped_;
      }
    }
  }
}

void Solver::step(StateFields& fields, double dt) {
  if (dt <= 0) throw SolverError("step: dt must be > 0");
  const double admissible = auto_dt() / config_.safety;
  if (dt > admissible * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step: dt " << dt << " violates the CFL/diffusion bound "
        << admissible;
    throw SolverError(msg.str());
  }
  if (scratch_.n_states != model_.n_states ||
      scratch_.grid.cells() != grid_.cells()) {
    scratch_ = StateFields::zeros(grid_, model_.n_states);
  }
  advect(fields, scratch_, dt);
  diffuse(scratch_, fields, dt);
  react(fields, dt);
  clip_negative(fields);
  fields.t += dt;
}

RunResult Solver::run(StateFields initial) {
  if (initial.grid.nx != grid_.nx || initial.grid.ny != grid_.ny ||
      initial.n_states != model_.n_states)
    throw SolverError("run: initial fields do not match the solver grid/model");
  if (config_.t_end <= initial.t) throw SolverError("run: t_end must exceed t0");

  RunResult result;
  std::vector<double> targets = config_.snapshot_times;
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  for (double t : targets) {
    if (t < initial.t || t > config_.t_end)
      throw SolverError("run: snapshot time outside [t0, t_end]");
  }
  if (targets.empty() || targets.back() != config_.t_end)
    targets.push_back(config_.t_end);

  const double base_dt = config_.fixed_dt ? *config_.fixed_dt : auto_dt();
  if (config_.fixed_dt && *config_.fixed_dt > auto_dt() / config_.safety)
    throw SolverError("run: fixed dt violates the stability bound");

  StateFields fields = std::move(initial);
  {
    Moments m0 = moments(fields);
    result.moments.push_back({fields.t, m0.mass, m0.mean_y, m0.var_y});
  }

  const int stride = std::max(1, config_.moment_stride);
  size_t next_target = 0;
  std::uint64_t step_count = 0;
  while (fields.t < config_.t_end) {
    double target = targets[next_target];
    double dt = std::min(base_dt, target - fields.t);
    bool landing = (fields.t + dt >= target - 1e-14 * std::max(1.0, target));
    if (landing) dt = target - fields.t;
    step(fields, dt);
    if (landing) fields.t = target;  // absorb accumulated roundoff
    ++step_count;
    if (step_count % stride == 0 || landing) {
      Moments m = moments(fields);
      result.moments.push_back({fields.t, m.mass, m.mean_y, m.var_y});
    }
    if (landing) {
      if (std::find(config_.snapshot_times.begin(), config_.snapshot_times.end(),
                    target) != config_.snapshot_times.end()) {
        result.snapshots.push_back(fields);
      }
      ++next_target;
    }
  }
  result.steps = step_count;
  result.clipped_cells = clipped_;
  return result;
}

}  // namespace cargoflow
