#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cargoflow {

struct NelderMeadOptions {
  int max_iterations = 500;
  double simplex_tolerance = 1e-4;  // max vertex infinity-distance at stop
  double initial_step = 0.25;       // per-coordinate offset of the start simplex
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fx = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> best_history;  // best objective after each iteration
};

/// Standard downhill simplex (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). The objective may return +inf to reject a point, which is how
/// box bounds are enforced by callers.
NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const NelderMeadOptions& options = {});

}  // namespace cargoflow
