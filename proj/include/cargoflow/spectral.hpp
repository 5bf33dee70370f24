#pragma once

#include <optional>

#include <Eigen/Dense>

#include "cargoflow/model.hpp"

namespace cargoflow {

enum class Method { spectral, renewal, pde_moment };

const char* method_name(Method m);

/// Long-time transport of the total cargo population: drift v_eff and spread
/// sigma_eff, with Var[X(t)] ~ 2 sigma_eff t. Uncertainties are populated by
/// the renewal and PDE estimators only.
struct EffectiveTransport {
  double v_eff = 0;
  double sigma_eff = 0;
  Method method = Method::spectral;
  std::optional<double> v_se;
  std::optional<double> sigma_se;
};

/// v_eff = <1, C u0> / <1, u0> = c . pi, with u0 the null vector of A.
double effective_velocity(const ModelSpec& model);

/// sigma_eff = <1, D u0 - C z> / <1, u0> where z solves A z = (C - v_eff) u0
/// on the range of A (bordered solve with the zero-sum constraint).
double effective_diffusivity(const ModelSpec& model);

EffectiveTransport effective_transport(const ModelSpec& model);

/// One point of the dispersion relation: the eigenvalue of A + nu C + nu^2 D
/// with the largest real part (the branch continuing from lambda(0) = 0).
struct DispersionPoint {
  double nu = 0;
  double lambda = 0;
  Eigen::VectorXd eigenvector;
  double branch_separation = 0;  // gap to the next-largest real part
  bool branch_warning = false;   // separation below 1e-8
};

DispersionPoint dispersion_eigenvalue(const ModelSpec& model, double nu);

/// Asymptotic Gaussian density of the total population: mean -v_eff t,
/// variance 2 sigma_eff t. Throws for t <= 0.
double gaussian_profile(const EffectiveTransport& eff, double t, double y);

}  // namespace cargoflow
