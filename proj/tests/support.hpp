#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "cemfd/control_space.hpp"
#include "cemfd/forward_solver.hpp"
#include "cemfd/geometry.hpp"
#include "cemfd/lattice.hpp"

namespace cemfd::testing {

constexpr double kPi = 3.14159265358979323846;

inline Electrode edge_electrode(int axis, bool upper, double a, double b, double z = 1.0) {
  Electrode e;
  e.face = {axis, upper};
  e.a = a;
  e.b = b;
  e.z = z;
  return e;
}

inline Electrode face_electrode(int axis, bool upper, double a, double b, double a2, double b2,
                                double z = 1.0) {
  Electrode e = edge_electrode(axis, upper, a, b, z);
  e.a2 = a2;
  e.b2 = b2;
  return e;
}

inline Electrode arc_electrode(double a, double b, double z = 1.0) {
  Electrode e;
  e.a = a;
  e.b = b;
  e.z = z;
  return e;
}

// Unit square, electrodes over the full left and right edges.
inline std::vector<Electrode> left_right(double z = 1.0) {
  return {edge_electrode(0, false, 0.0, 1.0, z), edge_electrode(0, true, 0.0, 1.0, z)};
}

// Unit square, one centred electrode of length 0.5 per edge: left, bottom, right, top.
inline std::vector<Electrode> four_sides(double z = 0.1) {
  return {edge_electrode(0, false, 0.25, 0.75, z), edge_electrode(1, false, 0.25, 0.75, z),
          edge_electrode(0, true, 0.25, 0.75, z), edge_electrode(1, true, 0.25, 0.75, z)};
}

inline std::vector<Electrode> disk_pair(double z = 1.0) {
  return {arc_electrode(-kPi / 4, kPi / 4, z), arc_electrode(3 * kPi / 4, 5 * kPi / 4, z)};
}

// Opposite faces x1 = 0 and x1 = 1 of the unit cube, centred squares of side 0.5.
inline std::vector<Electrode> box_pair(double z = 1.0) {
  return {face_electrode(0, false, 0.25, 0.75, 0.25, 0.75, z),
          face_electrode(0, true, 0.25, 0.75, 0.25, 0.75, z)};
}

struct Setup {
  DomainSpec spec;
  std::vector<Electrode> electrodes;
  const char* name;
};

inline std::vector<Setup> all_setups() {
  return {{DomainSpec::rect(1, 1), four_sides(), "rect"},
          {DomainSpec::disk(1), disk_pair(), "disk"},
          {DomainSpec::box(1, 1, 1), box_pair(), "box"}};
}

inline Eigen::MatrixXd dense(const SparseMatrix& A) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(A.rows, A.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = A.row_ptr[static_cast<std::size_t>(i)]; k < A.row_ptr[static_cast<std::size_t>(i) + 1];
         ++k) {
      M(i, A.col[static_cast<std::size_t>(k)]) = A.val[static_cast<std::size_t>(k)];
    }
  }
  return M;
}

inline std::vector<double> random_zero_sum(std::mt19937_64& rng, std::size_t m, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> U(m);
  double s = 0.0;
  for (double& v : U) s += (v = d(rng));
  for (double& v : U) v -= s / static_cast<double>(m);
  return U;
}

inline GridFunction random_grid(std::shared_ptr<const Lattice> lat, std::mt19937_64& rng, double lo,
                                double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  GridFunction g(lat);
  for (double& v : g.data()) v = d(rng);
  return g;
}

}  // namespace cemfd::testing
