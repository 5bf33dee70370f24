#include "cargoflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cargoflow/rng.hpp"

namespace cargoflow {

double FilamentSegment::length() const {
  return std::hypot(b.x - a.x, b.y - a.y);
}

namespace {

double draw_length(const LengthDist& dist, const Rect& domain, RngStream& rng) {
  switch (dist.kind) {
    case LengthDist::Kind::FullSpan:
      return domain.height();
    case LengthDist::Kind::Fixed:
      return dist.lo;
    case LengthDist::Kind::Uniform:
      return dist.lo + (dist.hi - dist.lo) * rng.uniform();
  }
  return 0;
}

// Liang-Barsky: clips the parametric segment a + t (b - a), t in [0,1], to
// the rectangle. Returns false if nothing remains.
bool clip_to_rect(const Rect& r, Point2 a, Point2 b, double& t0, double& t1) {
  t0 = 0.0;
  t1 = 1.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - r.x0, r.x1 - a.x, a.y - r.y0, r.y1 - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return false;
    } else {
      double t = q[k] / p[k];
      if (p[k] < 0.0) {
        if (t > t1) return false;
        if (t > t0) t0 = t;
      } else {
        if (t < t0) return false;
        if (t < t1) t1 = t;
      }
    }
  }
  return t1 > t0;
}

Point2 clip_segment_endpoint(Point2 a, Point2 b, double t) {
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

}  // namespace

std::vector<FilamentSegment> parallel_network(const Rect& domain, int n_filaments,
                                              double p_down,
                                              const LengthDist& length_dist,
                                              std::uint64_t seed) {
  std::vector<FilamentSegment> out;
  out.reserve(n_filaments);
  for (int i = 0; i < n_filaments; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    double x = domain.x0 + domain.width() * rng.uniform();
    double len = draw_length(length_dist, domain, rng);
    double yc = length_dist.kind == LengthDist::Kind::FullSpan
                    ? domain.y0 + 0.5 * domain.height()
                    : domain.y0 + domain.height() * rng.uniform();
    double ylo = std::max(domain.y0, yc - 0.5 * len);
    double yhi = std::min(domain.y1, yc + 0.5 * len);
    if (yhi <= ylo) continue;
    bool down = rng.uniform() <= p_down;
    FilamentSegment seg;
    seg.orientation = down ? Point2{0.0, -1.0} : Point2{0.0, 1.0};
    // endpoints ordered minus end -> plus end
    seg.a = down ? Point2{x, yhi} : Point2{x, ylo};
    seg.b = down ? Point2{x, ylo} : Point2{x, yhi};
    out.push_back(seg);
  }
  return out;
}

std::vector<FilamentSegment> radial_network(const Rect& domain, Point2 origin,
                                            int n_filaments, double kappa,
                                            const LengthDist& length_dist,
                                            std::uint64_t seed) {
  if (!domain.contains(origin)) throw Error("radial_network: origin outside domain");
  if (kappa <= 0) throw Error("radial_network: kappa must be > 0");
  std::vector<FilamentSegment> out;
  out.reserve(n_filaments);
  const double noise_sd = std::isinf(kappa) ? 0.0 : 1.0 / std::sqrt(kappa);
  for (int i = 0; i < n_filaments; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    Point2 center{domain.x0 + domain.width() * rng.uniform(),
                  domain.y0 + domain.height() * rng.uniform()};
    double base = std::atan2(center.y - origin.y, center.x - origin.x);
    double theta = base + (noise_sd > 0 ? noise_sd * rng.normal() : 0.0);
    Point2 dir{std::cos(theta), std::sin(theta)};
    double len = draw_length(length_dist, domain, rng);
    Point2 a{center.x - 0.5 * len * dir.x, center.y - 0.5 * len * dir.y};
    Point2 b{center.x + 0.5 * len * dir.x, center.y + 0.5 * len * dir.y};
    double t0, t1;
    if (!clip_to_rect(domain, a, b, t0, t1)) continue;
    FilamentSegment seg;
    seg.a = clip_segment_endpoint(a, b, t0);
    seg.b = clip_segment_endpoint(a, b, t1);
    seg.orientation = dir;
    if (seg.length() <= 0) continue;
    out.push_back(seg);
  }
  return out;
}

namespace {

// Exact per-cell overlap lengths by uniform-grid traversal.
void for_each_cell_overlap(
    const GridSpec& g, Point2 a, Point2 b,
    const std::function<void(int ix, int iy, double len)>& emit) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (len == 0.0) return;
  Rect box{g.x0, g.y0, g.x0 + g.nx * g.dx, g.y0 + g.ny * g.dy};
  double t0, t1;
  if (!clip_to_rect(box, a, b, t0, t1)) return;

  const double dx = b.x - a.x, dy = b.y - a.y;
  Point2 start{a.x + t0 * dx, a.y + t0 * dy};
  int ix = std::clamp(static_cast<int>(std::floor((start.x - g.x0) / g.dx)), 0,
                      g.nx - 1);
  int iy = std::clamp(static_cast<int>(std::floor((start.y - g.y0) / g.dy)), 0,
                      g.ny - 1);

  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  const double t_delta_x = dx != 0 ? std::abs(g.dx / dx) : 0;
  const double t_delta_y = dy != 0 ? std::abs(g.dy / dy) : 0;

  double t_max_x = std::numeric_limits<double>::infinity();
  double t_max_y = std::numeric_limits<double>::infinity();
  if (dx != 0) {
    double edge = g.x0 + (ix + (step_x > 0 ? 1 : 0)) * g.dx;
    t_max_x = (edge - a.x) / dx;
  }
  if (dy != 0) {
    double edge = g.y0 + (iy + (step_y > 0 ? 1 : 0)) * g.dy;
    t_max_y = (edge - a.y) / dy;
  }

  double t = t0;
  for (;;) {
    double t_next = std::min({t_max_x, t_max_y, t1});
    if (t_next > t) emit(ix, iy, (t_next - t) * len);
    if (t_next >= t1) return;
    if (t_max_x <= t_max_y) {
      ix += step_x;
      t_max_x += t_delta_x;
      if (ix < 0 || ix >= g.nx) return;
    } else {
      iy += step_y;
      t_max_y += t_delta_y;
      if (iy < 0 || iy >= g.ny) return;
    }
    t = t_next;
  }
}

}  // namespace

NetworkField rasterize(const std::vector<FilamentSegment>& segments,
                       const GridSpec& grid) {
  NetworkField f;
  f.grid = grid;
  const int n = grid.cells();
  f.raw_length.assign(n, 0.0);
  f.rho.assign(n, 0.0);
  f.dir_x.assign(n, 0.0);
  f.dir_y.assign(n, 0.0);
  f.polarity.assign(n, 0.0);
  f.mixed_polarity.assign(n, 0);

  std::vector<double> sum_ox(n, 0.0), sum_oy(n, 0.0);
  for (const auto& seg : segments) {
    for_each_cell_overlap(grid, seg.a, seg.b, [&](int ix, int iy, double len) {
      int idx = grid.index(ix, iy);
      f.raw_length[idx] += len;
      sum_ox[idx] += len * seg.orientation.x;
      sum_oy[idx] += len * seg.orientation.y;
    });
  }

  double max_len = 0.0;
  for (double v : f.raw_length) max_len = std::max(max_len, v);
  for (int i = 0; i < n; ++i) {
    if (f.raw_length[i] <= 0.0) continue;
    f.rho[i] = max_len > 0 ? f.raw_length[i] / max_len : 0.0;
    double norm = std::hypot(sum_ox[i], sum_oy[i]);
    if (norm > 1e-12 * f.raw_length[i]) {
      f.dir_x[i] = sum_ox[i] / norm;
      f.dir_y[i] = sum_oy[i] / norm;
      f.polarity[i] = norm / f.raw_length[i];
    } else {
      f.mixed_polarity[i] = 1;  // antiparallel cancellation
    }
  }
  return f;
}

NetworkField uniform_field(const GridSpec& grid, Point2 orientation) {
  NetworkField f;
  f.grid = grid;
  const int n = grid.cells();
  double norm = std::hypot(orientation.x, orientation.y);
  if (norm == 0) throw Error("uniform_field: zero orientation");
  f.raw_length.assign(n, 1.0);
  f.rho.assign(n, 1.0);
  f.dir_x.assign(n, orientation.x / norm);
  f.dir_y.assign(n, orientation.y / norm);
  f.polarity.assign(n, 1.0);
  f.mixed_polarity.assign(n, 0);
  return f;
}

NetworkField field_from_profile(const GridSpec& grid,
                                const std::function<double(double)>& rho_of_x) {
  NetworkField f = uniform_field(grid, {0.0, -1.0});
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      double r = rho_of_x(grid.cx(ix));
      if (r < 0 || r > 1) throw Error("field_from_profile: rho outside [0,1]");
      int idx = grid.index(ix, iy);
      f.rho[idx] = r;
      f.raw_length[idx] = r;
    }
  }
  return f;
}

Eigen::MatrixXd modulate_rates(const ModelSpec& model, double rho,
                               const std::vector<int>& binding_states) {
  Eigen::MatrixXd A = model.rates;
  const int n = model.n_states;
  for (int i : binding_states) {
    for (int j = 0; j < n; ++j) {
      if (i != j) A(i, j) = model.rates(i, j) * rho;
    }
  }
  for (int j = 0; j < n; ++j) {
    A(j, j) = 0.0;
    A(j, j) = -A.col(j).sum();
  }
  return A;
}

SpatialRates spatial_rates(const ModelSpec& model, NetworkField field,
                           std::vector<int> binding_states) {
  require_valid(model);
  for (int j : binding_states) {
    if (j < 0 || j >= model.n_states)
      throw ModelError("spatial_rates: binding state index out of range");
  }
  return {model, std::move(binding_states), std::move(field)};
}

}  // namespace cargoflow
