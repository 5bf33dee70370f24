#include "cargoflow/spectral.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace cargoflow {

const char* method_name(Method m) {
  switch (m) {
    case Method::spectral: return "spectral";
    case Method::renewal: return "renewal";
    case Method::pde_moment: return "pde_moment";
  }
  return "?";
}

double effective_velocity(const ModelSpec& model) {
  Eigen::VectorXd pi = stationary_distribution(model).pi;
  return model.speeds.dot(pi);
}

double effective_diffusivity(const ModelSpec& model) {
  Eigen::VectorXd u0 = stationary_distribution(model).pi;  // normalized to sum 1
  const double v_eff = model.speeds.dot(u0);
  // r = (C - v_eff I) u0 has zero sum, so it lies in the range of A.
  Eigen::VectorXd r = model.speeds.cwiseProduct(u0) - v_eff * u0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.n_states);
  Eigen::VectorXd z = linalg::bordered_solve(model.rates, ones, r, 0.0);
  return model.diffusivities.dot(u0) - model.speeds.dot(z);
}

EffectiveTransport effective_transport(const ModelSpec& model) {
  EffectiveTransport eff;
  eff.v_eff = effective_velocity(model);
  eff.sigma_eff = effective_diffusivity(model);
  eff.method = Method::spectral;
  return eff;
}

DispersionPoint dispersion_eigenvalue(const ModelSpec& model, double nu) {
  require_valid(model);
  Eigen::MatrixXd L = model.rates + nu * model.speed_matrix() +
                      nu * nu * model.diffusion_matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) {
    throw SolverError("dispersion_eigenvalue: eigensolver failed");
  }
  const auto& vals = es.eigenvalues();
  int best = 0, second = -1;
  for (int i = 1; i < vals.size(); ++i) {
    if (vals(i).real() > vals(best).real()) {
      second = best;
      best = i;
    } else if (second < 0 || vals(i).real() > vals(second).real()) {
      second = i;
    }
  }
  DispersionPoint p;
  p.nu = nu;
  p.lambda = vals(best).real();
  p.branch_separation =
      second >= 0 ? vals(best).real() - vals(second).real()
                  : std::numeric_limits<double>::infinity();
  p.branch_warning = p.branch_separation < 1e-8;
  // The principal branch is real near nu = 0; rotate the phase away and keep
  // the real part, normalized to unit sum for comparison with u0.
  Eigen::VectorXcd vec = es.eigenvectors().col(best);
  int imax = 0;
  vec.cwiseAbs().maxCoeff(&imax);
  vec /= vec(imax);
  p.eigenvector = vec.real();
  double s = p.eigenvector.sum();
  if (std::abs(s) > 1e-300) p.eigenvector /= s;
  return p;
}

double gaussian_profile(const EffectiveTransport& eff, double t, double y) {
  if (t <= 0) throw Error("gaussian_profile: t must be > 0");
  if (eff.sigma_eff <= 0) throw Error("gaussian_profile: sigma_eff must be > 0");
  const double var = 2.0 * eff.sigma_eff * t;
  const double dy = y + eff.v_eff * t;
  return std::exp(-dy * dy / (2.0 * var)) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace cargoflow
