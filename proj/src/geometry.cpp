#include "cemfd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cemfd/errors.hpp"

namespace cemfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Angle t mapped into [base, base + 2π).
double wrap_from(double t, double base) {
  double d = std::fmod(t - base, kTwoPi);
  if (d < 0.0) d += kTwoPi;
  return base + d;
}

bool in_closed_cell(const Cell& cell, const Point& x, int n) {
  const double tol = 1e-12 * std::max(1.0, cell.h);
  for (int i = 0; i < n; ++i) {
    if (x[i] < cell.lo[i] - tol || x[i] > cell.lo[i] + cell.h + tol) return false;
  }
  return true;
}

// Arc length of the circle |x| = r over angles [a, b] clipped to a closed 2D cell.
// The arc is split at every crossing with the four cell lines; each sub-arc is then
// either entirely inside or entirely outside the cell.
double arc_in_cell(double r, double a, double b, const Cell& cell) {
  std::vector<double> cuts{a, b};
  auto add = [&](double t) {
    double w = wrap_from(t, a);
    if (w > a && w < b) cuts.push_back(w);
  };
  for (int axis = 0; axis < 2; ++axis) {
    for (double c : {cell.lo[axis], cell.lo[axis] + cell.h}) {
      if (std::abs(c) > r) continue;
      double ratio = std::clamp(c / r, -1.0, 1.0);
      if (axis == 0) {
        double phi = std::acos(ratio);
        add(phi);
        add(-phi);
      } else {
        double phi = std::asin(ratio);
        add(phi);
        add(std::numbers::pi - phi);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double length = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double t0 = cuts[k];
    double t1 = cuts[k + 1];
    if (t1 <= t0) continue;
    double tm = 0.5 * (t0 + t1);
    Point mid{r * std::cos(tm), r * std::sin(tm), 0.0};
    if (in_closed_cell(cell, mid, 2)) length += r * (t1 - t0);
  }
  return length;
}

}  // namespace

DomainSpec DomainSpec::rect(double w1, double w2) {
  DomainSpec s;
  s.kind = DomainKind::Rect2D;
  s.widths = {w1, w2, 0.0};
  return s;
}

DomainSpec DomainSpec::box(double w1, double w2, double w3) {
  DomainSpec s;
  s.kind = DomainKind::Box3D;
  s.widths = {w1, w2, w3};
  return s;
}

DomainSpec DomainSpec::disk(double r) {
  DomainSpec s;
  s.kind = DomainKind::Disk2D;
  s.widths = {0.0, 0.0, 0.0};
  s.radius = r;
  return s;
}

void DomainSpec::validate() const {
  switch (kind) {
    case DomainKind::Rect2D:
      if (!(widths[0] > 0.0 && widths[1] > 0.0))
        throw InvalidArgument("rectangle widths must be positive");
      break;
    case DomainKind::Box3D:
      if (!(widths[0] > 0.0 && widths[1] > 0.0 && widths[2] > 0.0))
        throw InvalidArgument("box widths must be positive");
      break;
    case DomainKind::Disk2D:
      if (!(radius > 0.0)) throw InvalidArgument("disk radius must be positive");
      break;
  }
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case DomainKind::Rect2D:
      os << "rect2d(" << widths[0] << "," << widths[1] << ")";
      break;
    case DomainKind::Box3D:
      os << "box3d(" << widths[0] << "," << widths[1] << "," << widths[2] << ")";
      break;
    case DomainKind::Disk2D:
      os << "disk2d(" << radius << ")";
      break;
  }
  return os.str();
}

std::vector<int> tangent_axes(const DomainSpec& spec, const Face& face) {
  std::vector<int> axes;
  for (int i = 0; i < spec.dim(); ++i) {
    if (i != face.axis) axes.push_back(i);
  }
  return axes;
}

double face_position(const DomainSpec& spec, const Face& face) {
  return face.upper ? spec.widths[static_cast<std::size_t>(face.axis)] : 0.0;
}

double electrode_measure(const DomainSpec& spec, const Electrode& e) {
  switch (spec.kind) {
    case DomainKind::Rect2D:
      return e.b - e.a;
    case DomainKind::Box3D:
      return (e.b - e.a) * (e.b2 - e.a2);
    case DomainKind::Disk2D:
      return spec.radius * (e.b - e.a);
  }
  return 0.0;
}

void validate_electrodes(const DomainSpec& spec, const std::vector<Electrode>& electrodes) {
  spec.validate();
  if (electrodes.empty()) throw InvalidArgument("at least one electrode is required");
  const int n = spec.dim();
  for (std::size_t l = 0; l < electrodes.size(); ++l) {
    const Electrode& e = electrodes[l];
    const std::string tag = "electrode " + std::to_string(l + 1) + ": ";
    if (!(e.z > 0.0)) throw InvalidArgument(tag + "contact impedance must be positive");
    if (!(e.b > e.a)) throw InvalidArgument(tag + "patch must have positive measure");
    if (spec.kind == DomainKind::Disk2D) {
      if (e.b - e.a > kTwoPi + 1e-14) throw InvalidArgument(tag + "arc longer than the circle");
      continue;
    }
    if (e.face.axis < 0 || e.face.axis >= n) throw InvalidArgument(tag + "bad face axis");
    auto tangents = tangent_axes(spec, e.face);
    const double w0 = spec.widths[static_cast<std::size_t>(tangents[0])];
    if (e.a < 0.0 || e.b > w0) throw InvalidArgument(tag + "patch leaves its face");
    if (n == 3) {
      const double w1 = spec.widths[static_cast<std::size_t>(tangents[1])];
      if (!(e.b2 > e.a2)) throw InvalidArgument(tag + "patch must have positive measure");
      if (e.a2 < 0.0 || e.b2 > w1) throw InvalidArgument(tag + "patch leaves its face");
    }
  }
  for (std::size_t p = 0; p < electrodes.size(); ++p) {
    for (std::size_t q = p + 1; q < electrodes.size(); ++q) {
      const Electrode& e = electrodes[p];
      const Electrode& f = electrodes[q];
      double shared = 0.0;
      if (spec.kind == DomainKind::Disk2D) {
        double fa = wrap_from(f.a, e.a);
        for (double shift : {-kTwoPi, 0.0, kTwoPi}) {
          shared += overlap(e.a, e.b, fa + shift, fa + shift + (f.b - f.a));
        }
      } else if (e.face == f.face) {
        shared = overlap(e.a, e.b, f.a, f.b);
        if (n == 3) shared *= overlap(e.a2, e.b2, f.a2, f.b2);
      }
      if (shared > 0.0) {
        throw InvalidArgument("electrodes " + std::to_string(p + 1) + " and " +
                              std::to_string(q + 1) + " overlap");
      }
    }
  }
}

bool point_in_closed_domain(const DomainSpec& spec, const Point& x) {
  if (spec.kind == DomainKind::Disk2D) {
    return x[0] * x[0] + x[1] * x[1] <= spec.radius * spec.radius;
  }
  for (int i = 0; i < spec.dim(); ++i) {
    if (x[i] < 0.0 || x[i] > spec.widths[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

Point clamp_to_domain(const DomainSpec& spec, const Point& x) {
  Point y = x;
  if (spec.kind == DomainKind::Disk2D) {
    double rho = std::hypot(x[0], x[1]);
    if (rho > spec.radius) {
      y[0] = x[0] * spec.radius / rho;
      y[1] = x[1] * spec.radius / rho;
    }
    y[2] = 0.0;
    return y;
  }
  for (int i = 0; i < spec.dim(); ++i) {
    y[i] = std::clamp(x[i], 0.0, spec.widths[static_cast<std::size_t>(i)]);
  }
  return y;
}

bool cell_intersects_domain(const DomainSpec& spec, const Cell& cell) {
  if (spec.kind == DomainKind::Disk2D) {
    double d2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      double nearest = std::clamp(0.0, cell.lo[i], cell.lo[i] + cell.h);
      d2 += nearest * nearest;
    }
    return d2 < spec.radius * spec.radius;
  }
  for (int i = 0; i < spec.dim(); ++i) {
    double w = spec.widths[static_cast<std::size_t>(i)];
    if (!(cell.lo[i] < w && cell.lo[i] + cell.h > 0.0)) return false;
  }
  return true;
}

bool cell_meets_boundary(const DomainSpec& spec, const Cell& cell) {
  if (spec.kind == DomainKind::Disk2D) {
    double d2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      double far = std::max(std::abs(cell.lo[i]), std::abs(cell.lo[i] + cell.h));
      d2 += far * far;
    }
    return d2 >= spec.radius * spec.radius;
  }
  for (int i = 0; i < spec.dim(); ++i) {
    double w = spec.widths[static_cast<std::size_t>(i)];
    if (cell.lo[i] <= 0.0 || cell.lo[i] + cell.h >= w) return true;
  }
  return false;
}

BoundaryMeasure electrode_cell_measure(const DomainSpec& spec, const Electrode& e,
                                       const Cell& cell) {
  if (spec.kind == DomainKind::Disk2D) {
    double value = arc_in_cell(spec.radius, e.a, e.b, cell);
    return {value, 1e-12 * std::max(1.0, value)};
  }
  const auto axis = static_cast<std::size_t>(e.face.axis);
  const double c = face_position(spec, e.face);
  if (c < cell.lo[axis] || c > cell.lo[axis] + cell.h) return {0.0, 0.0};
  auto tangents = tangent_axes(spec, e.face);
  const auto t0 = static_cast<std::size_t>(tangents[0]);
  double value = overlap(e.a, e.b, cell.lo[t0], cell.lo[t0] + cell.h);
  if (spec.dim() == 3) {
    const auto t1 = static_cast<std::size_t>(tangents[1]);
    value *= overlap(e.a2, e.b2, cell.lo[t1], cell.lo[t1] + cell.h);
  }
  return {value, 0.0};
}

double boundary_perimeter(const DomainSpec& spec) {
  const auto& w = spec.widths;
  switch (spec.kind) {
    case DomainKind::Rect2D:
      return 2.0 * (w[0] + w[1]);
    case DomainKind::Box3D:
      return 2.0 * (w[0] * w[1] + w[0] * w[2] + w[1] * w[2]);
    case DomainKind::Disk2D:
      return kTwoPi * spec.radius;
  }
  return 0.0;
}

double domain_volume(const DomainSpec& spec) {
  const auto& w = spec.widths;
  switch (spec.kind) {
    case DomainKind::Rect2D:
      return w[0] * w[1];
    case DomainKind::Box3D:
      return w[0] * w[1] * w[2];
    case DomainKind::Disk2D:
      return std::numbers::pi * spec.radius * spec.radius;
  }
  return 0.0;
}

}  // namespace cemfd
