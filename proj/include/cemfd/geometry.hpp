#pragma once

#include <string>
#include <vector>

#include "cemfd/types.hpp"

namespace cemfd {

enum class DomainKind { Rect2D, Box3D, Disk2D };

// Rectangle and box have a corner at the origin; the disk is centred on it.
struct DomainSpec {
  DomainKind kind = DomainKind::Rect2D;
  std::array<double, 3> widths{1.0, 1.0, 0.0};
  double radius = 0.0;

  static DomainSpec rect(double w1, double w2);
  static DomainSpec box(double w1, double w2, double w3);
  static DomainSpec disk(double r);

  int dim() const { return kind == DomainKind::Box3D ? 3 : 2; }
  void validate() const;
  std::string describe() const;
};

// Face of a rectangle/box: the plane x_axis = 0 (lower) or x_axis = w_axis (upper).
struct Face {
  int axis = 0;
  bool upper = false;

  friend bool operator==(const Face&, const Face&) = default;
};

// Boundary patch E_l with contact impedance z.
//
// Rect2D: [a, b] along the single tangent axis of `face`.
// Box3D:  [a, b] x [a2, b2] along the two tangent axes of `face`, lower axis first.
// Disk2D: angles [a, b] measured counter-clockwise from the x1 axis; `face` unused.
struct Electrode {
  Face face{};
  double a = 0.0;
  double b = 0.0;
  double a2 = 0.0;
  double b2 = 0.0;
  double z = 1.0;
};

struct BoundaryMeasure {
  double value = 0.0;
  double tolerance = 0.0;
};

// Tangent axes of a face, in increasing order.
std::vector<int> tangent_axes(const DomainSpec& spec, const Face& face);

// Coordinate of the face plane.
double face_position(const DomainSpec& spec, const Face& face);

// Throws InvalidArgument unless every patch is non-degenerate, lies on the
// boundary, has z > 0, and patches have pairwise disjoint interiors.
void validate_electrodes(const DomainSpec& spec, const std::vector<Electrode>& electrodes);

// (n-1)-dimensional measure of the whole patch.
double electrode_measure(const DomainSpec& spec, const Electrode& e);

bool point_in_closed_domain(const DomainSpec& spec, const Point& x);

// Nearest point of the closed domain.
Point clamp_to_domain(const DomainSpec& spec, const Point& x);

// True iff the closed cell meets the open domain.
bool cell_intersects_domain(const DomainSpec& spec, const Cell& cell);

// True iff the closed cell meets the boundary S. Meaningful for cells that
// intersect the domain.
bool cell_meets_boundary(const DomainSpec& spec, const Cell& cell);

// m_{n-1}(E_l ∩ cell).
BoundaryMeasure electrode_cell_measure(const DomainSpec& spec, const Electrode& e,
                                       const Cell& cell);

double boundary_perimeter(const DomainSpec& spec);

double domain_volume(const DomainSpec& spec);

}  // namespace cemfd
