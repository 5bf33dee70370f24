#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cargoflow/geometry.hpp"
#include "cargoflow/model.hpp"

namespace cargoflow {

/// Per-state concentration fields on a shared uniform grid.
struct StateFields {
  GridSpec grid;
  int n_states = 0;
  double t = 0;
  std::vector<std::vector<double>> u;  // u[state][iy*nx+ix]

  static StateFields zeros(const GridSpec& grid, int n_states);
  double total_mass() const;  // integral of the summed fields
};

/// Deposits a normalized Gaussian blob (total mass `mass`) split across
/// states by `weights`. sigma is the spatial standard deviation.
void deposit_gaussian(StateFields& fields, const Eigen::VectorXd& weights,
                      double cx, double cy, double sigma, double mass = 1.0);

/// All of `mass` into the cell containing (cx, cy).
void deposit_delta(StateFields& fields, const Eigen::VectorXd& weights,
                   double cx, double cy, double mass = 1.0);

/// Uniform concentration `level` (per unit area) split across states.
void deposit_uniform(StateFields& fields, const Eigen::VectorXd& weights,
                     double level = 1.0);

/// mass, center of mass along y, and second central moment along y of the
/// summed fields. Throws on non-positive mass.
struct Moments {
  double mass = 0;
  double mean_y = 0;
  double var_y = 0;
};
Moments moments(const StateFields& fields);

struct MomentPoint {
  double t = 0;
  double mass = 0;
  double mean_y = 0;
  double var_y = 0;
};

struct SolverConfig {
  std::optional<double> fixed_dt;  // unset: auto CFL/diffusion-limited dt
  double safety = 0.9;
  double t_end = 0;
  std::vector<double> snapshot_times;
  int workers = 1;
  int moment_stride = 1;  // record moments every k-th step (and at t_end)
};

struct RunResult {
  std::vector<StateFields> snapshots;
  std::vector<MomentPoint> moments;
  std::uint64_t steps = 0;
  std::uint64_t clipped_cells = 0;  // negative values zeroed (diagnostic)
};

/// Finite-volume solver for the n-state advection-reaction-diffusion system
/// on a 2-D rectangle with no-flux boundaries. One step is an operator split:
/// first-order upwind advection, explicit 5-point diffusion, then the exact
/// reaction propagator exp(A dt) per cell (cached over 256 quantized
/// availability levels in spatial mode).
///
/// Advection carries state j at speed c_j toward decreasing y in constant
/// mode, or along the local network direction scaled by cell polarity in
/// network mode.
class Solver {
 public:
  /// Homogeneous rates, constant -y transport axis.
  Solver(ModelSpec model, GridSpec grid, SolverConfig config);

  /// Binding rates scaled by the local availability field. If
  /// advect_along_network, transport follows the per-cell mean orientation;
  /// otherwise it stays on the -y axis (parallel-track availability model).
  Solver(ModelSpec model, SpatialRates rates, bool advect_along_network,
         SolverConfig config);

  double auto_dt() const;

  /// Advances the fields by one operator-split step. dt must satisfy the
  /// CFL/diffusion bound (auto_dt() is always admissible).
  void step(StateFields& fields, double dt);

  /// Runs to t_end, landing exactly on snapshot times.
  RunResult run(StateFields initial);

  const GridSpec& grid() const { return grid_; }
  const ModelSpec& model() const { return model_; }
  std::uint64_t clipped_cells() const { return clipped_; }

 private:
  void advect(const StateFields& in, StateFields& out, double dt) const;
  void diffuse(const StateFields& in, StateFields& out, double dt) const;
  void react(StateFields& fields, double dt);
  void clip_negative(StateFields& fields);
  void build_propagators(double dt);

  ModelSpec model_;
  GridSpec grid_;
  SolverConfig config_;
  std::optional<SpatialRates> spatial_;
  bool advect_network_ = false;
  std::vector<int> cell_level_;            // quantized rho per cell
  std::map<int, Eigen::MatrixXd> props_;   // level -> exp(A(rho) dt)
  double props_dt_ = -1.0;
  StateFields scratch_;
  std::uint64_t clipped_ = 0;
  static constexpr int kRhoLevels = 256;
};

}  // namespace cargoflow
