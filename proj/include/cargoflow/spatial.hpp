#pragma once

#include <Eigen/Sparse>

#include "cargoflow/model.hpp"
#include "cargoflow/spectral.hpp"

namespace cargoflow {

/// Piecewise-linear filament availability on the nondimensional cross-axis
/// x in [0,1]; values are clamped to the end samples outside the range.
struct RhoProfile {
  std::vector<double> xs;
  std::vector<double> values;

  double at(double x) const;
  double mean() const;  // integral over [0,1]
  static RhoProfile constant(double value);
  static RhoProfile from_samples(std::vector<double> xs, std::vector<double> values);
};

/// Solution of the parallel-track cell problems on a vertex grid over [0,1]:
/// u0 is the normalized kernel of (D d^2/dx^2 + A(x)), w0 the zero-mean
/// solution of the first-order corrector equation.
struct SpatialProfile {
  int m = 0;        // grid points
  int n_states = 0;
  double h = 0;     // 1/(m-1)
  Eigen::VectorXd u0;  // layout: point i, state j -> i*n_states + j
  Eigen::VectorXd w0;  // empty until the corrector solve
};

/// Discretizes (D d^2/dx^2 + A(x)) with second-order central differences and
/// reflecting ends, and solves the kernel and corrector problems through a
/// bordered sparse LU. The border vector is the trapezoid-weighted ones
/// vector, the discrete left null vector of the operator.
class SpatialSolver {
 public:
  SpatialSolver(ModelSpec model, RhoProfile rho, std::vector<int> binding_states,
                int m = 401);

  const Eigen::SparseMatrix<double>& op() const { return M_; }
  const Eigen::VectorXd& weighted_ones() const { return q_; }
  double x(int i) const { return i * profile_.h; }

  /// Normalized nonnegative kernel vector with integral(<1, u0>) = 1.
  const SpatialProfile& solve_u0();

  /// Corrector with integral(<1, w0>) = 0; requires solve_u0 first (called
  /// implicitly). Checks the solvability residual and the equation residual.
  const SpatialProfile& solve_w0();

  /// v_eff from u0 and sigma_eff from the corrector formula, both by
  /// trapezoid quadrature on the solver grid.
  EffectiveTransport effective_transport();

  /// integral over [0,1] of the summed states of a (m*n)-vector field.
  double integrate_states(const Eigen::VectorXd& field) const;

 private:
  void factorize();

  ModelSpec model_;
  RhoProfile rho_;
  std::vector<int> binding_states_;
  SpatialProfile profile_;
  Eigen::SparseMatrix<double> M_;   // mn x mn operator
  Eigen::SparseMatrix<double> B_;   // bordered (mn+1) system
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::VectorXd q_;               // trapezoid weights kron ones
  bool factorized_ = false;
  bool have_u0_ = false;
  bool have_w0_ = false;
  double v_eff_ = 0;
};

/// Convenience wrapper: solve both cell problems and evaluate the spatially
/// corrected effective transport.
EffectiveTransport spatial_effective_transport(const ModelSpec& model,
                                               const RhoProfile& rho,
                                               const std::vector<int>& binding_states,
                                               int m = 401);

}  // namespace cargoflow
