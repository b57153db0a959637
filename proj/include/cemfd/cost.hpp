#pragma once

#include <functional>
#include <vector>

#include "cemfd/geometry.hpp"
#include "cemfd/lattice.hpp"

namespace cemfd {

// Electrode currents; must sum to zero (conservation of charge).
struct CurrentPattern {
  std::vector<double> I;
  void validate(int electrodes) const;
};

// Measured electrode voltages; must sum to zero (ground).
struct Measurement {
  std::vector<double> U_star;
  void validate(int electrodes) const;
};

struct CostBreakdown {
  std::vector<double> flux;      // Σ Γ_lα (U_l − u_α) / Z_l, or its boundary integral
  std::vector<double> mismatch;  // flux_l − I_l
  double fidelity = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

// Tolerance used for the zero-sum conditions: 1e-12 * max(1, Σ|v_l|).
double zero_sum_tolerance(const std::vector<double>& v);

// Projects v onto Σ v_l = 0.
std::vector<double> zero_sum_projection(std::vector<double> v);

CostBreakdown discrete_cost(const Lattice& lattice, const std::vector<double>& U,
                            const GridFunction& u, const CurrentPattern& I,
                            const Measurement& U_star, double beta);

// Continuous cost with ∫_{E_l} (U_l − u)/Z_l ds by composite Gauss rules on
// the patches, split at the planes x_i = k * split_h so that a multilinear
// state on that lattice is integrated exactly (up to the disk arc).
CostBreakdown continuous_cost(const DomainSpec& spec, const std::vector<Electrode>& electrodes,
                              const std::function<double(const Point&)>& u, double split_h,
                              const std::vector<double>& U, const CurrentPattern& I,
                              const Measurement& U_star, double beta);

}  // namespace cemfd
