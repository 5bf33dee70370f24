#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace cargoflow {

/// Base class for all library errors. Subcommands catch this and emit a
/// single-line machine-parsable message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Number of workers to use when the caller passed 0 ("pick a default").
/// Honors the CARGOFLOW_JOBS environment variable, else hardware threads.
int default_workers();

/// Static-partition parallel map over [0, n). Each index is processed exactly
/// once; results must be written to disjoint per-index slots so that the
/// outcome is independent of the worker count.
void parallel_for(std::int64_t n, int workers,
                  const std::function<void(std::int64_t)>& body);

namespace linalg {

/// Solves the bordered system [[M, w], [w^T, 0]] (x; mu) = (b; g).
/// Used to invert a conservative rate operator on its range: the border row
/// pins w.x = g and the border column absorbs the left null vector.
/// Throws SolverError if the factorization is singular or the residual of the
/// assembled system exceeds tolerance (never silently regularized).
Eigen::VectorXd bordered_solve(const Eigen::MatrixXd& M,
                               const Eigen::VectorXd& w,
                               const Eigen::VectorXd& b, double g);

}  // namespace linalg

/// Uniform cell-centered 2-D grid. Cell (ix, iy) has center
/// (x0 + (ix+1/2) dx, y0 + (iy+1/2) dy); values are stored row-major with
/// index iy*nx + ix.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double dx = 0;
  double dy = 0;
  double x0 = 0;
  double y0 = 0;

  int cells() const { return nx * ny; }
  int index(int ix, int iy) const { return iy * nx + ix; }
  double cx(int ix) const { return x0 + (ix + 0.5) * dx; }
  double cy(int iy) const { return y0 + (iy + 0.5) * dy; }
  double width() const { return nx * dx; }
  double height() const { return ny * dy; }
};

}  // namespace cargoflow
