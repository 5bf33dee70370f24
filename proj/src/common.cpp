#include "cargoflow/common.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <sstream>

namespace cargoflow {

int default_workers() {
  if (const char* env = std::getenv("CARGOFLOW_JOBS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, int workers,
                  const std::function<void(std::int64_t)>& body) {
  if (workers <= 0) workers = default_workers();
  if (workers == 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  // Chunked dynamic scheduling; per-index work goes to disjoint slots so the
  // schedule cannot change results.
  const std::int64_t chunk = std::max<std::int64_t>(1, n / (8 * workers));
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::int64_t begin = next.fetch_add(chunk);
        if (begin >= n || failed.load()) return;
        std::int64_t end = std::min(begin + chunk, n);
        try {
          for (std::int64_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace linalg {

Eigen::VectorXd bordered_solve(const Eigen::MatrixXd& M,
                               const Eigen::VectorXd& w,
                               const Eigen::VectorXd& b, double g) {
  const Eigen::Index n = M.rows();
  if (M.cols() != n || w.size() != n || b.size() != n) {
    throw SolverError("bordered_solve: dimension mismatch");
  }
  Eigen::MatrixXd B(n + 1, n + 1);
  B.topLeftCorner(n, n) = M;
  B.topRightCorner(n, 1) = w;
  B.bottomLeftCorner(1, n) = w.transpose();
  B(n, n) = 0.0;
  Eigen::VectorXd rhs(n + 1);
  rhs.head(n) = b;
  rhs(n) = g;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  Eigen::VectorXd sol = lu.solve(rhs);
  const double scale =
      std::max({1.0, M.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff() == 0
                                                  ? 0.0
                                                  : b.cwiseAbs().maxCoeff()});
  const double resid = (B * sol - rhs).cwiseAbs().maxCoeff();
  if (!sol.allFinite() || resid > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "bordered_solve: singular system (residual " << resid << ")";
    throw SolverError(msg.str());
  }
  return sol.head(n);
}

}  // namespace linalg

}  // namespace cargoflow
