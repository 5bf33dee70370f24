#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cargoflow/nelder_mead.hpp"
#include "cargoflow/pde.hpp"
#include "cargoflow/spectral.hpp"

namespace cargoflow {

/// Bleach-spot experiment description plus the synthesis domain/grid.
/// The postbleach level inside the spot is either uniform (1 - depth) or a
/// measured radial profile (radius, level) interpolated linearly; outside the
/// spot the prebleach plateau is 1.
struct FrapProtocol {
  Point2 spot_center;
  double spot_radius = 0;
  double bleach_depth = 0;  // in [0,1); level inside spot = 1 - depth
  std::vector<std::pair<double, double>> postbleach_profile;  // (r, level)
  std::vector<double> times;

  Rect domain;
  int nx = 0, ny = 0;

  GridSpec grid() const;
  double level_at(double r) const;  // postbleach level at radius r
  void check() const;
};

struct RecoveryCurve {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> weights;  // empty = all ones
};

/// Runs the PDE from stationary prebleach concentrations reduced by the
/// postbleach profile, and returns the spot-integrated total concentration at
/// the observation times, normalized by the prebleach spot integral.
RecoveryCurve synthesize(const ModelSpec& model, const FrapProtocol& protocol,
                         int workers = 1);

/// Weighted least squares between a model curve and data on matching times.
double curve_objective(const RecoveryCurve& model_curve, const RecoveryCurve& data);

/// Parameter-vector to model mapping used by sweep and fit.
struct ModelTemplate {
  std::vector<std::string> param_names;
  std::function<ModelSpec(const Eigen::VectorXd&)> make;

  static ModelTemplate two_state();           // (d, c, beta1, beta2)
  static ModelTemplate reaction_diffusion();  // (d, beta1, beta2), no advection
};

struct SweepRow {
  Eigen::VectorXd params;
  double objective = 0;
  std::string note;  // failure reason when objective is +inf
};

/// Log-spaced grid values for one parameter.
std::vector<double> log_grid(double lo, double hi, int count);

/// Evaluates the objective on the cartesian product of per-parameter grids.
/// Rows are returned in grid order (last parameter fastest); failed solves
/// carry an infinite objective and a reason.
std::vector<SweepRow> sweep(const RecoveryCurve& data, const FrapProtocol& protocol,
                            const ModelTemplate& tmpl,
                            const std::vector<std::vector<double>>& grids,
                            int workers = 1);

struct FitOptions {
  int top_k_starts = 5;           // multi-start count taken from the sweep
  int max_iterations = 500;
  double simplex_tolerance = 1e-4;  // log10-space diameter
  double log_lo = -4.0, log_hi = 4.0;  // box bounds, log10 of model units
  int workers = 1;
};

struct LocalOptimum {
  Eigen::VectorXd params;
  double objective = 0;
  int iterations = 0;
  bool converged = false;
};

struct FitResult {
  Eigen::VectorXd params;       // best optimum
  double objective = 0;
  std::vector<LocalOptimum> optima;       // all distinct local optima, ranked
  std::vector<SweepRow> sweep_table;      // ranked copy of the sweep
  std::vector<double> descent_history;    // best objective per iteration
  std::vector<std::string> flat_params;   // identifiability diagnostic
  bool converged = false;
};

/// Nelder-Mead descent on log10 parameters, multi-started from the best
/// sweep rows. Reports every distinct optimum and flags parameters whose
/// near-optimal sweep values span a decade or more (flat valleys).
FitResult fit(const RecoveryCurve& data, const FrapProtocol& protocol,
              const ModelTemplate& tmpl, const std::vector<SweepRow>& sweep_table,
              const FitOptions& options = {});

/// Single-start variant used when the caller already has an initial guess.
FitResult fit_from_start(const RecoveryCurve& data, const FrapProtocol& protocol,
                         const ModelTemplate& tmpl, const Eigen::VectorXd& start,
                         const FitOptions& options = {});

/// Per-bound-state expected run time 1/exit and run length c/exit, plus the
/// spectral effective transport of the model.
struct RunStatistic {
  int state = 0;
  std::string label;
  double run_time = 0;
  double run_length = 0;
};
struct DerivedQuantities {
  std::vector<RunStatistic> runs;
  EffectiveTransport effective;
};
DerivedQuantities derived_quantities(const ModelSpec& model);

}  // namespace cargoflow
