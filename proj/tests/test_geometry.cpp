#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cargoflow/geometry.hpp"

using namespace cargoflow;

namespace {

GridSpec make_grid(const Rect& domain, int nx, int ny) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.x0 = domain.x0;
  g.y0 = domain.y0;
  g.dx = domain.width() / nx;
  g.dy = domain.height() / ny;
  return g;
}

double total_segment_length(const std::vector<FilamentSegment>& segs) {
  double acc = 0;
  for (const auto& s : segs) acc += s.length();
  return acc;
}

}  // namespace

TEST_CASE("parallel network: p=1 gives plus-end-down everywhere") {
  Rect domain{0, 0, 10, 20};
  auto segs = parallel_network(domain, 200, 1.0, LengthDist::full_span(), 5);
  REQUIRE(segs.size() == 200);
  for (const auto& s : segs) {
    CHECK(s.orientation.x == 0.0);
    CHECK(s.orientation.y == -1.0);
    CHECK(s.a.x == s.b.x);  // vertical
  }
}

TEST_CASE("parallel network: p=0.5 balances orientations") {
  Rect domain{0, 0, 10, 20};
  const int n = 10000;
  auto segs = parallel_network(domain, n, 0.5, LengthDist::full_span(), 7);
  int down = 0;
  for (const auto& s : segs) down += s.orientation.y < 0;
  double frac = static_cast<double>(down) / n;
  double se = std::sqrt(0.25 / n);
  CHECK(std::abs(frac - 0.5) < 3 * se);
}

TEST_CASE("empty network rasterizes to zero availability") {
  Rect domain{0, 0, 4, 4};
  auto segs = parallel_network(domain, 0, 1.0, LengthDist::full_span(), 1);
  CHECK(segs.empty());
  NetworkField f = rasterize(segs, make_grid(domain, 8, 8));
  for (double r : f.rho) CHECK(r == 0.0);
}

TEST_CASE("radial network: infinite concentration gives exactly radial plus ends") {
  Rect domain{0, 0, 10, 10};
  Point2 origin{5, 5};
  auto segs = radial_network(domain, origin, 500, INFINITY,
                             LengthDist::fixed(1.0), 11);
  for (const auto& s : segs) {
    Point2 mid{0.5 * (s.a.x + s.b.x), 0.5 * (s.a.y + s.b.y)};
    double base = std::atan2(mid.y - origin.y, mid.x - origin.x);
    double got = std::atan2(s.orientation.y, s.orientation.x);
    double diff = std::remainder(got - base, 2 * M_PI);
    CHECK(std::abs(diff) < 1e-9);
  }
}

TEST_CASE("radial network: angular deviation decreases monotonically in kappa") {
  Rect domain{0, 0, 10, 10};
  Point2 origin{5, 5};
  double prev = INFINITY;
  for (double kappa : {1.0, 4.0, 16.0, 64.0}) {
    auto segs = radial_network(domain, origin, 10000, kappa,
                               LengthDist::fixed(0.5), 13);
    double acc = 0;
    for (const auto& s : segs) {
      Point2 mid{0.5 * (s.a.x + s.b.x), 0.5 * (s.a.y + s.b.y)};
      double base = std::atan2(mid.y - origin.y, mid.x - origin.x);
      double got = std::atan2(s.orientation.y, s.orientation.x);
      acc += std::abs(std::remainder(got - base, 2 * M_PI));
    }
    double mean_dev = acc / segs.size();
    CHECK(mean_dev < prev);
    prev = mean_dev;
  }
}

TEST_CASE("radial network from a corner points into the quadrant") {
  Rect domain{0, 0, 10, 10};
  auto segs = radial_network(domain, {0, 0}, 300, INFINITY,
                             LengthDist::fixed(1.0), 17);
  for (const auto& s : segs) {
    CHECK(s.orientation.x >= -1e-12);
    CHECK(s.orientation.y >= -1e-12);
  }
}

TEST_CASE("rasterize: one full-height vertical filament lights one column") {
  Rect domain{0, 0, 4, 4};
  GridSpec g = make_grid(domain, 4, 4);
  FilamentSegment seg;
  seg.a = {1.5, 4.0};
  seg.b = {1.5, 0.0};
  seg.orientation = {0, -1};
  NetworkField f = rasterize({seg}, g);
  for (int iy = 0; iy < 4; ++iy) {
    for (int ix = 0; ix < 4; ++ix) {
      double expected = ix == 1 ? 1.0 : 0.0;
      CHECK(f.rho[g.index(ix, iy)] == doctest::Approx(expected));
    }
  }
  // orientation carried through
  for (int iy = 0; iy < 4; ++iy) {
    CHECK(f.dir_y[g.index(1, iy)] == doctest::Approx(-1.0));
    CHECK(f.polarity[g.index(1, iy)] == doctest::Approx(1.0));
  }
}

TEST_CASE("rasterize: antiparallel overlap cancels direction and flags the cell") {
  Rect domain{0, 0, 1, 1};
  GridSpec g = make_grid(domain, 1, 1);
  FilamentSegment up{{0.5, 0.0}, {0.5, 1.0}, {0, 1}};
  FilamentSegment down{{0.5, 1.0}, {0.5, 0.0}, {0, -1}};
  NetworkField f = rasterize({up, down}, g);
  CHECK(f.rho[0] > 0.0);
  CHECK(f.dir_x[0] == 0.0);
  CHECK(f.dir_y[0] == 0.0);
  CHECK(f.polarity[0] == 0.0);
  CHECK(f.mixed_polarity[0] == 1);
}

TEST_CASE("rasterize conserves total intersected length") {
  Rect domain{0, 0, 7, 5};
  GridSpec g = make_grid(domain, 23, 17);
  auto segs = radial_network(domain, {3.5, 2.5}, 400, 2.0,
                             LengthDist::uniform(0.3, 2.0), 23);
  NetworkField f = rasterize(segs, g);
  double cells_total = std::accumulate(f.raw_length.begin(), f.raw_length.end(), 0.0);
  CHECK(cells_total == doctest::Approx(total_segment_length(segs)).epsilon(1e-9));
}

TEST_CASE("rasterization is resolution-consistent for smooth networks") {
  Rect domain{0, 0, 8, 8};
  auto segs = radial_network(domain, {4, 4}, 3000, 3.0,
                             LengthDist::uniform(0.4, 1.2), 29);
  NetworkField coarse = rasterize(segs, make_grid(domain, 16, 16));
  NetworkField fine = rasterize(segs, make_grid(domain, 32, 32));
  // integrated raw length over each quadrant
  auto quadrant_sum = [&](const NetworkField& f, int qx, int qy) {
    double acc = 0;
    const GridSpec& g = f.grid;
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix)
        if ((ix * 2 / g.nx) == qx && (iy * 2 / g.ny) == qy)
          acc += f.raw_length[g.index(ix, iy)];
    return acc;
  };
  for (int qx = 0; qx < 2; ++qx) {
    for (int qy = 0; qy < 2; ++qy) {
      double a = quadrant_sum(coarse, qx, qy);
      double b = quadrant_sum(fine, qx, qy);
      CHECK(std::abs(a - b) / a < 0.02);
    }
  }
}

TEST_CASE("modulate_rates: rho=1 is the identity") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.5, 1.3, 2.7);
  Eigen::MatrixXd A = modulate_rates(m, 1.0, {0});
  CHECK((A - m.rates).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("modulate_rates: rho=0 removes binding but keeps unbinding") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.5, 1.3, 2.7);
  Eigen::MatrixXd A = modulate_rates(m, 0.0, {0});
  CHECK(A(0, 1) == 0.0);       // binding shut off
  CHECK(A(1, 0) == doctest::Approx(1.3));  // unbinding unchanged
  CHECK(A(1, 1) == 0.0);       // diffusing state no longer exits
  CHECK(A(0, 0) == doctest::Approx(-1.3));
}

TEST_CASE("modulate_rates scales binding linearly in rho") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.5, 1.3, 2.7);
  for (double rho : {0.25, 0.5, 0.75}) {
    Eigen::MatrixXd A = modulate_rates(m, rho, {0});
    CHECK(A(0, 1) == doctest::Approx(2.7 * rho));
    // columns stay conservative
    for (int j = 0; j < 2; ++j) CHECK(std::abs(A.col(j).sum()) < 1e-14);
  }
}

TEST_CASE("spatial rates pass cell-wise validation away from rho=0") {
  ModelSpec m = ModelSpec::two_state(1.0, 0.5, 1.0, 2.0);
  Rect domain{0, 0, 2, 2};
  GridSpec g = make_grid(domain, 4, 4);
  NetworkField field = field_from_profile(g, [](double x) { return x / 2.0; });
  SpatialRates rates = spatial_rates(m, field, {0});
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      Eigen::MatrixXd A = rates.at(ix, iy);
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(A.col(j).sum()) < 1e-14);
        CHECK(A(j, j) <= 0.0);
      }
    }
  }
}
