#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cemfd/control_space.hpp"
#include "cemfd/cost.hpp"
#include "cemfd/forward_solver.hpp"

namespace cemfd {

struct Gradient {
  GridFunction sigma;      // ∂J_h/∂σ_α, zero off Q_h⁺
  std::vector<double> U;   // ∂J_h/∂U_l
  CostBreakdown cost;
};

// Discrete adjoint of J_h at the solved state u of sys.
Gradient adjoint_gradient(const StiffnessSystem& sys, const DiscreteControl& c,
                          const GridFunction& u, const CurrentPattern& I,
                          const Measurement& U_star, double beta, double tol = 1e-12);

struct OptimizerConfig {
  int max_iters = 500;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double grad_tol = 1e-10;
  double cost_tol = 1e-14;
  double solver_tol = 1e-12;
  int max_backtracks = 60;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterateRecord {
  int iter = 0;
  double cost = 0.0;
  double fidelity = 0.0;
  double penalty = 0.0;
  double gradnorm = 0.0;
  double step = 0.0;
  double slack = 0.0;
};

struct Reconstruction {
  DiscreteControl control;
  std::vector<IterateRecord> trace;  // row 0 is the initial control
  std::string reason;                // cost_tol, grad_tol, max_iters, stalled
};

// Projected gradient descent on J_h over 𝓕ᴿ_h with backtracking on the
// projected point. Throws StalledLineSearch when not even the first step
// decreases the cost.
Reconstruction reconstruct(std::shared_ptr<const Lattice> lattice, const DiscreteControl& init,
                           const CurrentPattern& I, const Measurement& U_star,
                           const AdmissibilityParams& params, const OptimizerConfig& cfg);

struct DirectionCheck {
  double adjoint = 0.0;
  double finite_difference = 0.0;
  double relative_error = 0.0;
};

// Directional derivatives of J_h along random directions (σ on all nodes, U
// projected to zero sum) by the adjoint and by central differences.
std::vector<DirectionCheck> gradient_check(std::shared_ptr<const Lattice> lattice,
                                           const DiscreteControl& c, const CurrentPattern& I,
                                           const Measurement& U_star, double beta,
                                           int directions, double step, std::uint64_t seed,
                                           double tol = 1e-14);

struct SyntheticData {
  CurrentPattern I;
  Measurement U_star;
};

// Currents of the true conductivity under U_true, solved on a lattice of step
// h_data, and U* = U_true plus relative Gaussian noise (projected to zero sum).
SyntheticData synthesize_data(const ConductivityField& truth, const DomainSpec& spec,
                              const std::vector<Electrode>& electrodes, double h_data,
                              const std::vector<double>& U_true, double noise,
                              std::uint64_t seed, double tol = 1e-12);

}  // namespace cemfd
