#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cargoflow/model.hpp"

namespace cargoflow {

struct Point2 {
  double x = 0;
  double y = 0;
};

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(Point2 p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
};

/// Oriented filament: endpoints plus the unit vector from minus end to plus
/// end (the direction motor-driven cargo travels).
struct FilamentSegment {
  Point2 a, b;
  Point2 orientation;
  double length() const;
};

struct LengthDist {
  enum class Kind { FullSpan, Fixed, Uniform };
  Kind kind = Kind::FullSpan;
  double lo = 0, hi = 0;

  static LengthDist full_span() { return {Kind::FullSpan, 0, 0}; }
  static LengthDist fixed(double len) { return {Kind::Fixed, len, len}; }
  static LengthDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
};

/// Vertical filaments at uniform-random x; each is plus-end-down with
/// probability p_down. Filament i draws from stream (seed, i).
std::vector<FilamentSegment> parallel_network(const Rect& domain, int n_filaments,
                                              double p_down,
                                              const LengthDist& length_dist,
                                              std::uint64_t seed);

/// Filaments whose plus ends point away from the origin, with the radial
/// direction perturbed by a wrapped normal deviate of standard deviation
/// 1/sqrt(kappa). kappa = +inf gives exactly radial orientations.
std::vector<FilamentSegment> radial_network(const Rect& domain, Point2 origin,
                                            int n_filaments, double kappa,
                                            const LengthDist& length_dist,
                                            std::uint64_t seed);

/// Per-cell filament availability and mean orientation.
/// rho is the intersected filament length per cell, normalized so the max is
/// 1. direction is the unit mean orientation; polarity = |mean orientation|
/// in [0,1] measures how aligned the intersecting filaments are (the net
/// advection vector is polarity * direction). Cells whose filaments cancel
/// exactly keep direction = 0 and are flagged mixed_polarity.
struct NetworkField {
  GridSpec grid;
  std::vector<double> rho;
  std::vector<double> dir_x, dir_y;
  std::vector<double> polarity;
  std::vector<std::uint8_t> mixed_polarity;
  std::vector<double> raw_length;  // unnormalized per-cell intersected length
};

NetworkField rasterize(const std::vector<FilamentSegment>& segments,
                       const GridSpec& grid);

/// Uniform field at rho = 1 with the given constant orientation (used to
/// cross-check network-mode advection against the constant-axis mode).
NetworkField uniform_field(const GridSpec& grid, Point2 orientation);

/// Field with rho varying along x only (parallel-track availability profile)
/// and plus-end-down orientation.
NetworkField field_from_profile(const GridSpec& grid,
                                const std::function<double(double)>& rho_of_x);

/// Rate matrix with every rate into a bound state scaled by rho and the
/// diagonal recomputed, preserving column conservation.
Eigen::MatrixXd modulate_rates(const ModelSpec& model, double rho,
                               const std::vector<int>& binding_states);

/// Spatially varying rate matrix A(x): binding rates follow the local
/// filament availability.
struct SpatialRates {
  ModelSpec model;
  std::vector<int> binding_states;
  NetworkField field;

  Eigen::MatrixXd at(int ix, int iy) const {
    return modulate_rates(model, field.rho[field.grid.index(ix, iy)],
                          binding_states);
  }
};

SpatialRates spatial_rates(const ModelSpec& model, NetworkField field,
                           std::vector<int> binding_states);

}  // namespace cargoflow
