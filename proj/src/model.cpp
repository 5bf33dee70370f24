#include "cargoflow/model.hpp"

#include <queue>
#include <sstream>

namespace cargoflow {

ModelSpec ModelSpec::two_state(double c, double d, double beta1, double beta2) {
  ModelSpec m;
  m.n_states = 2;
  m.speeds = Eigen::Vector2d(c, 0.0);
  m.diffusivities = Eigen::Vector2d(0.0, d);
  m.rates = Eigen::Matrix2d{{-beta1, beta2}, {beta1, -beta2}};
  m.state_labels = {"moving", "diffusing"};
  m.bound_states = {0};
  return m;
}

namespace {

// Strong connectivity of the nonzero off-diagonal pattern: BFS from 0 on the
// graph and on its transpose.
bool reaches_all(const Eigen::MatrixXd& A, bool transpose) {
  const int n = static_cast<int>(A.rows());
  std::vector<char> seen(n, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int j = q.front();
    q.pop();
    for (int i = 0; i < n; ++i) {
      if (i == j || seen[i]) continue;
      double r = transpose ? A(j, i) : A(i, j);
      if (r != 0.0) {
        seen[i] = 1;
        ++count;
        q.push(i);
      }
    }
  }
  return count == n;
}

}  // namespace

std::vector<Violation> validate(const ModelSpec& m) {
  std::vector<Violation> out;
  const int n = m.n_states;
  if (n <= 0) {
    out.push_back({"n_states", {}, "n_states must be positive"});
    return out;
  }
  if (m.speeds.size() != n || m.diffusivities.size() != n ||
      m.rates.rows() != n || m.rates.cols() != n) {
    out.push_back({"shape", {}, "speeds/diffusivities/rates sizes must match n_states"});
    return out;
  }

  const double scale = std::max(1.0, m.rates.cwiseAbs().maxCoeff());
  for (int j = 0; j < n; ++j) {
    double colsum = m.rates.col(j).sum();
    if (std::abs(colsum) > 1e-10 * scale) {
      std::ostringstream msg;
      msg << "column " << j << " not conservative (sum " << colsum << ")";
      out.push_back({"conservation", {j}, msg.str()});
    }
    if (m.rates(j, j) > 0) {
      out.push_back({"diagonal_sign", {j}, "diagonal entry must be <= 0"});
    }
    for (int i = 0; i < n; ++i) {
      if (i != j && m.rates(i, j) < 0) {
        std::ostringstream msg;
        msg << "rate (" << j << " -> " << i << ") is negative";
        out.push_back({"offdiag_sign", {i, j}, msg.str()});
      }
    }
    if (m.diffusivities(j) < 0) {
      out.push_back({"diffusivity_sign", {j}, "diffusivity must be >= 0"});
    }
  }
  if (m.speeds.cwiseAbs().maxCoeff() == 0.0 &&
      m.diffusivities.cwiseAbs().maxCoeff() == 0.0) {
    out.push_back({"all_zero", {}, "speeds and diffusivities are all zero"});
  }
  if (n > 1 && (!reaches_all(m.rates, false) || !reaches_all(m.rates, true))) {
    out.push_back({"irreducible", {}, "not irreducible: rate graph is not strongly connected"});
  }
  for (int j : m.bound_states) {
    if (j < 0 || j >= n)
      out.push_back({"bound_states", {j}, "bound state index out of range"});
  }
  return out;
}

void require_valid(const ModelSpec& m) {
  auto violations = validate(m);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid model:";
  for (const auto& v : violations) msg << " [" << v.invariant << "] " << v.message << ";";
  throw ModelError(msg.str());
}

StationaryDistribution stationary_distribution(const ModelSpec& m) {
  require_valid(m);
  const int n = m.n_states;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd pi;
  try {
    pi = linalg::bordered_solve(m.rates, ones, Eigen::VectorXd::Zero(n), 1.0);
  } catch (const SolverError&) {
    throw ModelError("stationary_distribution: null space of A is not one-dimensional");
  }
  const double scale = std::max(1.0, m.rates.cwiseAbs().maxCoeff());
  if ((m.rates * pi).cwiseAbs().maxCoeff() > 1e-10 * scale || pi.minCoeff() < -1e-12) {
    throw ModelError("stationary_distribution: null space of A is not one-dimensional");
  }
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return {pi};
}

EmbeddedChain embedded_chain(const ModelSpec& m) {
  require_valid(m);
  const int n = m.n_states;
  EmbeddedChain chain;
  chain.exit_rates.resize(n);
  chain.jump_probs = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double rate = -m.rates(j, j);
    if (rate <= 0.0) {
      std::ostringstream msg;
      msg << "embedded_chain: state " << j << " has zero exit rate";
      throw ModelError(msg.str());
    }
    chain.exit_rates(j) = rate;
    for (int i = 0; i < n; ++i) {
      if (i != j) chain.jump_probs(i, j) = m.rates(i, j) / rate;
    }
  }
  return chain;
}

Eigen::MatrixXd reassemble_rates(const EmbeddedChain& chain) {
  const int n = static_cast<int>(chain.exit_rates.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i != j) A(i, j) = chain.exit_rates(j) * chain.jump_probs(i, j);
    }
    A(j, j) = -chain.exit_rates(j);
  }
  return A;
}

}  // namespace cargoflow
