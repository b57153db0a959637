#pragma once

#include <vector>

#include "cemfd/geometry.hpp"
#include "cemfd/types.hpp"

namespace cemfd {

// Gauss-Legendre rule mapped to [0, 1]; weights sum to 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussRule& gauss_legendre(int order);

struct QuadPoint {
  Point x{};
  double w = 0.0;
};

// Tensor Gauss points over the box [lo, lo + size]^n.
std::vector<QuadPoint> box_quadrature(const Point& lo, const Point& size, int n, int order);

// Points over cell ∩ Q. Exact box clipping for Rect2D/Box3D; for the disk the
// x1 range is split at every kink of the clipped chord and integrated with
// composite Gauss rules.
std::vector<QuadPoint> cell_domain_quadrature(const DomainSpec& spec, const Cell& cell,
                                              int order);

// Surface points on the patch E_l. The patch is split at every lattice plane
// x_i = k * split_h so that piecewise multilinear integrands stay smooth on
// each piece.
std::vector<QuadPoint> patch_quadrature(const DomainSpec& spec, const Electrode& e,
                                        double split_h, int order);

// Surface points on the whole boundary S, split the same way.
std::vector<QuadPoint> boundary_quadrature(const DomainSpec& spec, double split_h, int order);

}  // namespace cemfd
