#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cemfd/errors.hpp"
#include "cemfd/geometry.hpp"
#include "cemfd/quadrature.hpp"
#include "support.hpp"

using namespace cemfd;
using namespace cemfd::testing;

namespace {

// Length of the segment p->q inside the axis-aligned box (Liang-Barsky).
double clipped_length(double px, double py, double qx, double qy, double x0, double x1, double y0,
                      double y1) {
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = qx - px;
  const double dy = qy - py;
  auto clip = [&](double p, double q) {
    if (p == 0.0) return q >= 0.0;
    double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
    return true;
  };
  if (!clip(-dx, px - x0) || !clip(dx, x1 - px) || !clip(-dy, py - y0) || !clip(dy, y1 - py)) {
    return 0.0;
  }
  return t1 > t0 ? (t1 - t0) * std::hypot(dx, dy) : 0.0;
}

double polyline_arc_in_box(double r, double a, double b, double x0, double x1, double y0, double y1,
                           int segments) {
  double s = 0.0;
  for (int k = 0; k < segments; ++k) {
    double t0 = a + (b - a) * k / segments;
    double t1 = a + (b - a) * (k + 1) / segments;
    s += clipped_length(r * std::cos(t0), r * std::sin(t0), r * std::cos(t1), r * std::sin(t1), x0,
                        x1, y0, y1);
  }
  return s;
}

}  // namespace

TEST(CellIntersectsDomain, RectInteriorCell) {
  EXPECT_TRUE(cell_intersects_domain(DomainSpec::rect(1, 1), Cell{{0, 0, 0}, 0.5}));
}

TEST(CellIntersectsDomain, RectCellTouchingOnlyBoundary) {
  EXPECT_FALSE(cell_intersects_domain(DomainSpec::rect(1, 1), Cell{{1, 0, 0}, 0.5}));
}

TEST(CellIntersectsDomain, DiskStraddlingCell) {
  EXPECT_TRUE(cell_intersects_domain(DomainSpec::disk(1), Cell{{0.9, -0.1, 0}, 0.2}));
}

TEST(CellIntersectsDomain, DiskCellTouchingCircleFromOutside) {
  EXPECT_FALSE(cell_intersects_domain(DomainSpec::disk(1), Cell{{1, -0.25, 0}, 0.5}));
}

TEST(CellIntersectsDomain, MonotoneUnderEnlargement) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::uniform_real_distribution<double> size(0.01, 0.5);
  for (const auto& spec : {DomainSpec::rect(1, 0.7), DomainSpec::disk(1), DomainSpec::box(1, 1, 0.5)}) {
    for (int trial = 0; trial < 2000; ++trial) {
      Cell c{{pos(rng), pos(rng), spec.dim() == 3 ? pos(rng) : 0.0}, size(rng)};
      Cell bigger = c;
      double grow = size(rng);
      for (int i = 0; i < spec.dim(); ++i) bigger.lo[static_cast<std::size_t>(i)] -= grow / 2;
      bigger.h += grow;
      if (cell_intersects_domain(spec, c)) {
        EXPECT_TRUE(cell_intersects_domain(spec, bigger));
      }
    }
  }
}

TEST(ElectrodeCellMeasure, FullSegmentOverlap) {
  auto e = edge_electrode(1, false, 0.0, 0.5);
  auto m = electrode_cell_measure(DomainSpec::rect(1, 1), e, Cell{{0, 0, 0}, 0.25});
  EXPECT_DOUBLE_EQ(m.value, 0.25);
}

TEST(ElectrodeCellMeasure, SinglePointContactIsZero) {
  auto e = edge_electrode(1, false, 0.0, 0.5);
  auto m = electrode_cell_measure(DomainSpec::rect(1, 1), e, Cell{{0.5, 0, 0}, 0.25});
  EXPECT_EQ(m.value, 0.0);
}

TEST(ElectrodeCellMeasure, DiskArcMatchesPolyline) {
  auto e = arc_electrode(0.0, kPi / 2);
  auto m = electrode_cell_measure(DomainSpec::disk(1), e, Cell{{0.9, 0.0, 0}, 0.25});
  double oracle = polyline_arc_in_box(1.0, 0.0, kPi / 2, 0.9, 1.15, 0.0, 0.25, 1000000);
  EXPECT_GT(m.value, 0.2);
  EXPECT_NEAR(m.value, oracle, 1e-9);
}

TEST(ElectrodeCellMeasure, DiskArcMatchesPolylineOnRandomCells) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-1.2, 1.0);
  auto e = arc_electrode(-0.4, 2.1);
  for (int trial = 0; trial < 30; ++trial) {
    Cell c{{pos(rng), pos(rng), 0}, 0.2};
    double got = electrode_cell_measure(DomainSpec::disk(1), e, c).value;
    double oracle = polyline_arc_in_box(1.0, -0.4, 2.1, c.lo[0], c.lo[0] + c.h, c.lo[1],
                                        c.lo[1] + c.h, 200000);
    EXPECT_NEAR(got, oracle, 1e-9);
  }
}

TEST(BoundaryPerimeter, Shapes) {
  EXPECT_DOUBLE_EQ(boundary_perimeter(DomainSpec::rect(1, 1)), 4.0);
  EXPECT_NEAR(boundary_perimeter(DomainSpec::disk(1)), 2 * kPi, 1e-15);
  EXPECT_DOUBLE_EQ(boundary_perimeter(DomainSpec::box(1, 1, 1)), 6.0);
}

TEST(ElectrodeCellMeasure, CellSumsRecoverPatchMeasure) {
  struct Case {
    DomainSpec spec;
    Electrode e;
    double h;
  };
  std::vector<Case> cases = {
      {DomainSpec::rect(1, 1), edge_electrode(1, true, 0.13, 0.77), 0.1},
      {DomainSpec::rect(2, 1), edge_electrode(0, true, 0.0, 1.0), 0.125},
      {DomainSpec::box(1, 1, 1), face_electrode(2, false, 0.1, 0.6, 0.35, 0.9), 0.125},
      {DomainSpec::disk(1), arc_electrode(0.3, 2.9), 0.1},
      {DomainSpec::disk(1.3), arc_electrode(-1.0, 5.0), 0.0625},
  };
  for (const auto& c : cases) {
    const int n = c.spec.dim();
    double total = 0.0;
    const int lo = -static_cast<int>(std::ceil(2.0 / c.h)) - 1;
    const int hi = static_cast<int>(std::ceil(2.0 / c.h)) + 1;
    for (int i = lo; i <= hi; ++i) {
      for (int j = lo; j <= hi; ++j) {
        for (int k = (n == 3 ? lo : 0); k <= (n == 3 ? hi : 0); ++k) {
          Cell cell{{i * c.h, j * c.h, k * c.h}, c.h};
          if (!cell_intersects_domain(c.spec, cell)) continue;
          total += electrode_cell_measure(c.spec, c.e, cell).value;
        }
      }
    }
    double expected = electrode_measure(c.spec, c.e);
    EXPECT_NEAR(total, expected, 1e-9 * expected) << c.spec.describe();
  }
}

TEST(ValidateElectrodes, RejectsOverlapAndBadImpedance) {
  auto spec = DomainSpec::rect(1, 1);
  EXPECT_THROW(validate_electrodes(spec, {edge_electrode(0, false, 0, 0.6), edge_electrode(0, false, 0.5, 1)}),
               InvalidArgument);
  EXPECT_THROW(validate_electrodes(spec, {edge_electrode(0, false, 0, 0.5, 0.0)}), InvalidArgument);
  EXPECT_THROW(validate_electrodes(spec, {edge_electrode(0, false, 0.5, 1.5)}), InvalidArgument);
  EXPECT_NO_THROW(validate_electrodes(spec, {edge_electrode(0, false, 0, 0.5), edge_electrode(0, false, 0.5, 1)}));
}

TEST(Quadrature, GaussRulesIntegratePolynomials) {
  for (int order = 1; order <= 8; ++order) {
    const auto& g = gauss_legendre(order);
    for (int p = 0; p < 2 * order; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < g.nodes.size(); ++k) s += g.weights[k] * std::pow(g.nodes[k], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "order " << order << " degree " << p;
    }
  }
}

TEST(Quadrature, CellDomainQuadratureRecoversDiskArea) {
  auto spec = DomainSpec::disk(1);
  double area = 0.0;
  const double h = 0.125;
  for (int i = -9; i <= 8; ++i) {
    for (int j = -9; j <= 8; ++j) {
      for (const auto& q : cell_domain_quadrature(spec, Cell{{i * h, j * h, 0}, h}, 4)) area += q.w;
    }
  }
  EXPECT_NEAR(area, kPi, 1e-6);
}

TEST(Quadrature, BoundaryQuadratureMeasuresPerimeter) {
  for (const auto& spec : {DomainSpec::rect(1, 2), DomainSpec::disk(0.7), DomainSpec::box(1, 2, 3)}) {
    double s = 0.0;
    for (const auto& q : boundary_quadrature(spec, 0.1, 3)) s += q.w;
    EXPECT_NEAR(s, boundary_perimeter(spec), 1e-12 * boundary_perimeter(spec)) << spec.describe();
  }
}
