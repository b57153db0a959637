#pragma once

#include <memory>
#include <vector>

#include "cemfd/control_space.hpp"
#include "cemfd/lattice.hpp"

namespace cemfd {

// Compressed sparse rows, columns sorted within each row.
struct SparseMatrix {
  int rows = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double at(int i, int j) const;
  std::vector<double> diagonal() const;
  // max |A_ij - A_ji| over stored entries.
  double asymmetry() const;
};

// One finite-difference edge α -> α + e_axis of 𝒜(Q_h⁽ⁱ⁾).
struct EdgeEntry {
  int node = -1;
  int axis = 0;
  double coefficient = 0.0;  // σ_α h^{n-2}, or h^{n-2} for a boundary θ-edge
  bool theta = false;
};

struct MassEntry {
  int electrode = 0;
  int node = -1;
  double value = 0.0;  // Γ_lα / Z_l
};

struct StiffnessSystem {
  std::shared_ptr<const Lattice> lattice;
  SparseMatrix A;
  std::vector<double> b;
  std::vector<EdgeEntry> edges;
  std::vector<MassEntry> mass;
  std::vector<double> U;
};

// Matrix of the discrete weak identity for the control (σ, U); Z_l are taken
// from the lattice electrodes. Throws DisconnectedSystem when a connected
// component of the edge graph carries no electrode mass.
StiffnessSystem assemble(std::shared_ptr<const Lattice> lattice, const DiscreteControl& c);

struct SolveReport {
  GridFunction u;
  int iterations = 0;
  double residual_norm = 0.0;
  double rhs_norm = 0.0;
  double energy_lhs = 0.0;  // |||[u]|||
  double energy_rhs = 0.0;  // M'|U|, filled by energy_check
  double cg_tolerance = 0.0;
};

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
  double residual_norm = 0.0;
};

// Jacobi-preconditioned conjugate gradients to ‖Ax - b‖ ≤ tol ‖b‖.
// Throws NoConvergence after 10 * rows iterations.
CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, double tol);

SolveReport solve(const StiffnessSystem& sys, double tol = 1e-10);

struct EnergyCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double mu_prime = 0.0;  // min{σ₀, min Z⁻¹, 1}
  double M_prime = 0.0;
  double mu_nominal = 0.0;  // min{σ₀, min Z⁻¹}
  double M_nominal = 0.0;
  bool pass = false;
};

// Constants M' and M of the energy estimate for the lattice geometry.
EnergyCheck energy_constants(const Lattice& lattice, double sigma0);

// Fills report.energy_rhs and compares it with the triple norm.
EnergyCheck energy_check(SolveReport& report, const std::vector<double>& U, double sigma0);

enum class StateInterpolation { PiecewiseConstant, PiecewiseConstantDiff, Multilinear };

// ũ_h, ũ_hⁱ (axis) or u′_h at x. Throws PointOutsideLattice.
double interpolate_state(const GridFunction& u, StateInterpolation kind, const Point& x,
                         int axis = 0);

// Left side of the discrete weak identity for (u, η), summed term by term over
// the index sets, and its right side for η. Independent of the assembled matrix.
double bilinear_form(const GridFunction& sigma, const GridFunction& u, const GridFunction& eta);
double linear_form(const Lattice& lattice, const std::vector<double>& U, const GridFunction& eta);

// Sum of absolute values of every term in the identity, for relative errors.
double weak_identity_scale(const GridFunction& sigma, const GridFunction& u,
                           const GridFunction& eta, const std::vector<double>& U);

struct TraceGap {
  std::vector<double> per_electrode;  // ‖ũ_h − u′_h‖²_{L2(E_l)}
  double total = 0.0;
  double bound = 0.0;  // L (2ⁿ−1) 2^{n−1} n Σ_i Σ h^{n+1} u_{αx_i}²
  double L = 0.0;      // max over cells of Σ_l Γ_lα / h^{n−1}
};

TraceGap electrode_trace_gap(const GridFunction& u);

struct GradientBound {
  double lhs = 0.0;         // ∫_Q |Du′_h|²
  double rhs_qplus = 0.0;   // 2^{n−1} Σ_i Σ_{Q_h⁺} hⁿ u_{αx_i}²
  double rhs_edges = 0.0;   // 2^{n−1} Σ_i Σ_{Q_h⁽ⁱ⁾} hⁿ u_{αx_i}²
};

GradientBound gradient_interpolant_bound(const GridFunction& u);

// ‖u′_h‖_{H¹(Q)} by cell quadrature.
double interpolant_h1_norm(const GridFunction& u);

}  // namespace cemfd
