#include "cargoflow/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cargoflow {

NelderMeadResult nelder_mead(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const NelderMeadOptions& options) {
  const int n = static_cast<int>(start.size());
  NelderMeadResult result;
  result.evaluations = 0;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    double f = objective(x);
    return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
  };

  std::vector<Eigen::VectorXd> v(n + 1, start);
  std::vector<double> f(n + 1);
  for (int i = 0; i < n; ++i) v[i + 1](i) += options.initial_step;
  for (int i = 0; i <= n; ++i) f[i] = eval(v[i]);

  std::vector<int> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    sort_simplex();
    const int best = order[0], worst = order[n], second_worst = order[n - 1];
    result.best_history.push_back(f[best]);
    result.iterations = iter + 1;

    double diameter = 0;
    for (int i = 1; i <= n; ++i)
      diameter = std::max(diameter,
                          (v[order[i]] - v[best]).cwiseAbs().maxCoeff());
    if (diameter < options.simplex_tolerance) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += v[i];
    centroid /= n;

    Eigen::VectorXd reflected = centroid + (centroid - v[worst]);
    double fr = eval(reflected);
    if (fr < f[best]) {
      Eigen::VectorXd expanded = centroid + 2.0 * (centroid - v[worst]);
      double fe = eval(expanded);
      if (fe < fr) {
        v[worst] = expanded;
        f[worst] = fe;
      } else {
        v[worst] = reflected;
        f[worst] = fr;
      }
    } else if (fr < f[second_worst]) {
      v[worst] = reflected;
      f[worst] = fr;
    } else {
      Eigen::VectorXd contracted = centroid + 0.5 * (v[worst] - centroid);
      double fc = eval(contracted);
      if (fc < f[worst]) {
        v[worst] = contracted;
        f[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          v[i] = v[best] + 0.5 * (v[i] - v[best]);
          f[i] = eval(v[i]);
        }
      }
    }
  }

  sort_simplex();
  result.x = v[order[0]];
  result.fx = f[order[0]];
  if (result.best_history.empty() || result.best_history.back() > result.fx)
    result.best_history.push_back(result.fx);
  return result;
}

}  // namespace cargoflow
