#include "cargoflow/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cargoflow/geometry.hpp"

namespace cargoflow {

double RhoProfile::at(double x) const {
  if (xs.empty()) throw Error("RhoProfile: empty profile");
  if (x <= xs.front()) return values.front();
  if (x >= xs.back()) return values.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  size_t hi = static_cast<size_t>(it - xs.begin());
  size_t lo = hi - 1;
  double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return values[lo] + t * (values[hi] - values[lo]);
}

double RhoProfile::mean() const {
  // trapezoid over [0,1] on a fine fixed grid
  const int n = 2001;
  double acc = 0.5 * (at(0.0) + at(1.0));
  for (int i = 1; i < n - 1; ++i) acc += at(i / double(n - 1));
  return acc / (n - 1);
}

RhoProfile RhoProfile::constant(double value) {
  return {{0.0, 1.0}, {value, value}};
}

RhoProfile RhoProfile::from_samples(std::vector<double> xs,
                                    std::vector<double> values) {
  if (xs.size() != values.size() || xs.size() < 2)
    throw Error("RhoProfile: need at least two (x, rho) samples");
  if (!std::is_sorted(xs.begin(), xs.end()))
    throw Error("RhoProfile: x samples must be sorted");
  for (double v : values)
    if (v < 0) throw Error("RhoProfile: rho must be >= 0");
  return {std::move(xs), std::move(values)};
}

SpatialSolver::SpatialSolver(ModelSpec model, RhoProfile rho,
                             std::vector<int> binding_states, int m)
    : model_(std::move(model)),
      rho_(std::move(rho)),
      binding_states_(std::move(binding_states)) {
  require_valid(model_);
  if (m < 3) throw SolverError("spatial: need at least 3 grid points");
  bool any_positive = false;
  for (size_t i = 0; i < rho_.values.size(); ++i) any_positive |= rho_.values[i] > 0;
  if (!any_positive) throw SolverError("spatial: rho is identically zero");

  const int n = model_.n_states;
  profile_.m = m;
  profile_.n_states = n;
  profile_.h = 1.0 / (m - 1);
  const double h2 = profile_.h * profile_.h;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(m) * n * (n + 2));
  auto id = [n](int i, int j) { return i * n + j; };
  for (int i = 0; i < m; ++i) {
    Eigen::MatrixXd A = modulate_rates(model_, rho_.at(x(i)), binding_states_);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (A(r, c) != 0.0) trip.emplace_back(id(i, r), id(i, c), A(r, c));
    for (int j = 0; j < n; ++j) {
      const double d = model_.diffusivities(j);
      if (d == 0.0) continue;
      if (i == 0) {
        trip.emplace_back(id(0, j), id(0, j), -2.0 * d / h2);
        trip.emplace_back(id(0, j), id(1, j), 2.0 * d / h2);
      } else if (i == m - 1) {
        trip.emplace_back(id(m - 1, j), id(m - 1, j), -2.0 * d / h2);
        trip.emplace_back(id(m - 1, j), id(m - 2, j), 2.0 * d / h2);
      } else {
        trip.emplace_back(id(i, j), id(i, j), -2.0 * d / h2);
        trip.emplace_back(id(i, j), id(i - 1, j), d / h2);
        trip.emplace_back(id(i, j), id(i + 1, j), d / h2);
      }
    }
  }
  M_.resize(m * n, m * n);
  M_.setFromTriplets(trip.begin(), trip.end());

  q_.resize(m * n);
  for (int i = 0; i < m; ++i) {
    double w = (i == 0 || i == m - 1) ? 0.5 * profile_.h : profile_.h;
    for (int j = 0; j < n; ++j) q_(id(i, j)) = w;
  }
}

void SpatialSolver::factorize() {
  if (factorized_) return;
  const int N = static_cast<int>(M_.rows());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(M_.nonZeros() + 2 * N);
  for (int k = 0; k < M_.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(M_, k); it; ++it) {
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                        it.value());
    }
  }
  for (int i = 0; i < N; ++i) {
    trip.emplace_back(i, N, q_(i));
    trip.emplace_back(N, i, q_(i));
  }
  B_.resize(N + 1, N + 1);
  B_.setFromTriplets(trip.begin(), trip.end());
  lu_.compute(B_);
  if (lu_.info() != Eigen::Success) {
    throw SolverError(
        "spatial: bordered factorization failed (kernel is not one-dimensional)");
  }
  factorized_ = true;
}

const SpatialProfile& SpatialSolver::solve_u0() {
  if (have_u0_) return profile_;
  factorize();
  const int N = static_cast<int>(M_.rows());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
  rhs(N) = 1.0;
  Eigen::VectorXd sol = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success || !sol.allFinite())
    throw SolverError("spatial: kernel solve failed");
  Eigen::VectorXd u0 = sol.head(N);
  const double scale = std::max(1.0, u0.cwiseAbs().maxCoeff());
  if ((M_ * u0).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw SolverError("spatial: kernel residual too large (null space not 1-D)");
  if (u0.minCoeff() < -1e-8 * scale)
    throw SolverError("spatial: kernel vector has negative components");
  profile_.u0 = u0.cwiseMax(0.0);
  // normalization: q . u0 = integral <1, u0> = 1 is imposed by the border row
  have_u0_ = true;
  v_eff_ = 0;
  for (int i = 0; i < profile_.m; ++i)
    for (int j = 0; j < model_.n_states; ++j)
      v_eff_ += q_(i * model_.n_states + j) * model_.speeds(j) *
                profile_.u0(i * model_.n_states + j);
  v_eff_ /= q_.dot(profile_.u0);
  return profile_;
}

const SpatialProfile& SpatialSolver::solve_w0() {
  if (have_w0_) return profile_;
  solve_u0();
  const int N = static_cast<int>(M_.rows());
  const int n = model_.n_states;
  // M w0 = -(C - v_eff) u0, with the zero-mean constraint in the border row
  Eigen::VectorXd b(N);
  for (int i = 0; i < profile_.m; ++i)
    for (int j = 0; j < n; ++j)
      b(i * n + j) = -(model_.speeds(j) - v_eff_) * profile_.u0(i * n + j);
  const double solvability = std::abs(q_.dot(b));
  if (solvability > 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "spatial: corrector RHS not in range (residual " << solvability << ")";
    throw SolverError(msg.str());
  }
  Eigen::VectorXd rhs(N + 1);
  rhs.head(N) = b;
  rhs(N) = 0.0;
  Eigen::VectorXd sol = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success || !sol.allFinite())
    throw SolverError("spatial: corrector solve failed");
  profile_.w0 = sol.head(N);
  const double resid = (M_ * profile_.w0 - b).cwiseAbs().maxCoeff();
  if (resid > 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    std::ostringstream msg;
    msg << "spatial: corrector residual " << resid << " exceeds tolerance";
    throw SolverError(msg.str());
  }
  have_w0_ = true;
  return profile_;
}

EffectiveTransport SpatialSolver::effective_transport() {
  solve_w0();
  const int n = model_.n_states;
  double denom = q_.dot(profile_.u0);
  double sig_d = 0, sig_c = 0;
  for (int i = 0; i < profile_.m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double w = q_(i * n + j);
      sig_d += w * model_.diffusivities(j) * profile_.u0(i * n + j);
      sig_c += w * model_.speeds(j) * profile_.w0(i * n + j);
    }
  }
  EffectiveTransport eff;
  eff.method = Method::spectral;
  eff.v_eff = v_eff_;
  eff.sigma_eff = (sig_d + sig_c) / denom;
  return eff;
}

double SpatialSolver::integrate_states(const Eigen::VectorXd& field) const {
  if (field.size() != q_.size())
    throw Error("integrate_states: size mismatch");
  return q_.dot(field);
}

EffectiveTransport spatial_effective_transport(const ModelSpec& model,
                                               const RhoProfile& rho,
                                               const std::vector<int>& binding_states,
                                               int m) {
  SpatialSolver solver(model, rho, binding_states, m);
  return solver.effective_transport();
}

}  // namespace cargoflow
