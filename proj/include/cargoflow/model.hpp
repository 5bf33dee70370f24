#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cargoflow/common.hpp"

namespace cargoflow {

/// An n-state switching model: per-state speed c_j (signed, along the
/// transport axis; positive speed carries mass toward decreasing y),
/// per-state diffusivity d_j >= 0, and a conservative transition-rate matrix
/// A whose columns index the "from" state, so that du/dt = A u propagates
/// column vectors of concentrations. A[i][j] (i != j) is the rate of
/// switching from state j to state i; diagonals are minus the column sums.
struct ModelSpec {
  int n_states = 0;
  Eigen::VectorXd speeds;         // length/second
  Eigen::VectorXd diffusivities;  // length^2/second
  Eigen::MatrixXd rates;          // 1/second, column-conservative
  std::vector<std::string> state_labels;
  std::vector<int> bound_states;  // states reached via filament binding

  Eigen::MatrixXd speed_matrix() const {
    return Eigen::MatrixXd(speeds.asDiagonal());
  }
  Eigen::MatrixXd diffusion_matrix() const {
    return Eigen::MatrixXd(diffusivities.asDiagonal());
  }

  /// The canonical 2-state model: state 0 moves with speed c, state 1
  /// diffuses with coefficient d; beta1 is the rate of leaving the moving
  /// state, beta2 the rate of (re)binding.
  static ModelSpec two_state(double c, double d, double beta1, double beta2);
};

struct Violation {
  std::string invariant;      // short machine-friendly name
  std::vector<int> indices;   // offending state/column indices, if any
  std::string message;
};

/// Checks all ModelSpec invariants (conservation, sign constraints,
/// irreducibility). Returns an empty list iff the model is valid.
std::vector<Violation> validate(const ModelSpec& model);

/// Throws ModelError listing every violation.
void require_valid(const ModelSpec& model);

struct StationaryDistribution {
  Eigen::VectorXd pi;  // nonnegative, sums to 1, A pi = 0
};

/// Unique normalized null vector of A, computed by the bordered solve
/// [[A, 1], [1^T, 0]] (pi; mu) = (0; 1). Throws if the null space is not
/// one-dimensional (reducible chain).
StationaryDistribution stationary_distribution(const ModelSpec& model);

/// Continuous-time chain split into exit rates and an embedded jump chain.
/// jump_probs columns are "from" states, matching the rate-matrix layout.
struct EmbeddedChain {
  Eigen::VectorXd exit_rates;  // -A[j][j]
  Eigen::MatrixXd jump_probs;  // P[i][j] = A[i][j] / exit_rates[j], P[j][j]=0
};

/// Throws ModelError naming any state with zero exit rate.
EmbeddedChain embedded_chain(const ModelSpec& model);

/// Reassembles the rate matrix from an embedded chain; inverse of
/// embedded_chain up to floating summation order.
Eigen::MatrixXd reassemble_rates(const EmbeddedChain& chain);

}  // namespace cargoflow
