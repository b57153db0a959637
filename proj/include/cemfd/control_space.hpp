#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cemfd/geometry.hpp"
#include "cemfd/lattice.hpp"

namespace cemfd {

// Gaussian inclusion amplitude * exp(-|x - center|^2 / radius^2).
struct Bump {
  Point center{};
  double radius = 0.1;
  double amplitude = 1.0;
};

// Conductivity on the closed domain, extended outside by evaluating at the
// nearest point of the domain.
class ConductivityField {
 public:
  enum class Kind { Constant, Analytic, FineGridSample };

  static ConductivityField constant(double c);
  static ConductivityField bumps(const DomainSpec& spec, double background, std::vector<Bump> bumps);
  // Nodal values on a reference lattice, read by multilinear interpolation.
  static ConductivityField fine_grid(GridFunction sample);

  // Catalog names: "constant", "bump", "two-bumps". `background` is the
  // constant level; `bump` is used only by "bump".
  static ConductivityField phantom(const std::string& name, const DomainSpec& spec,
                                   double background, const Bump& bump);

  Kind kind() const { return kind_; }
  double constant_value() const { return background_; }
  const std::vector<Bump>& bump_list() const { return bumps_; }
  const GridFunction& sample() const { return *sample_; }

  double operator()(const Point& x) const;

  // Mixed partial derivative over the axes set in `mask` (bit i = x_{i+1}),
  // of the extended field. Available for Constant and Analytic only.
  double derivative(const Point& x, unsigned mask) const;
  bool has_derivatives() const { return kind_ != Kind::FineGridSample; }

  // Smallest value over a dense sample of the domain (exact for Constant).
  double lower_bound_estimate(int samples_per_axis = 64) const;

 private:
  Kind kind_ = Kind::Constant;
  DomainSpec spec_{};
  bool has_spec_ = false;
  double background_ = 1.0;
  std::vector<Bump> bumps_;
  std::shared_ptr<const GridFunction> sample_;
};

struct DiscreteControl {
  GridFunction sigma;
  std::vector<double> U;
};

struct AdmissibilityParams {
  double R = 10.0;
  double sigma0 = 1.0;
  double beta = 1.0;

  void validate() const;
};

// σ_α = h^{-n} ∫_{C_h^α} σ for every node. Constant fields are exact; fine
// grid samples are integrated exactly on nested lattices; analytic fields use
// composite 4-point Gauss rules refined until the cell mean settles.
GridFunction steklov_discretize(const ConductivityField& sigma,
                                std::shared_ptr<const Lattice> lattice);

// 𝒫_h pointwise: multilinear interpolant of the corner values of the cell
// containing x. Throws PointOutsideLattice when no complete cell contains x.
double multilinear_interpolate(const GridFunction& sigma, const Point& x);

// Same as above on a known cell (natural corner id); x may lie anywhere.
double multilinear_on_cell(const GridFunction& sigma, int corner, const Point& x);

// Mixed partial derivative of the interpolant on a given cell over the axes in
// `mask` (bit i = x_{i+1}); mask 0 gives the value itself.
double multilinear_partial_on_cell(const GridFunction& sigma, int corner, const Point& x,
                                   unsigned mask);

// True when all 2^n corners of the cell with natural corner `id` are nodes.
bool cell_complete(const Lattice& lattice, int id);

// Σ over the cells of Q_h of ∫ (∂^mask σ)², composite Gauss rules split at
// the domain planes.
double derivative_l2_squared(const ConductivityField& sigma, const Lattice& lattice,
                             unsigned mask);

enum class Region { Q, Qh };

// H̃¹ norm of the multilinear interpolant, integrated cell by cell over the
// cells of Q_h (Region::Qh) or their intersections with Q (Region::Q).
double tilde_h1_norm_continuous(const GridFunction& sigma, Region region);

struct AdmissibilityReport {
  bool feasible = true;
  double slack = 0.0;
  std::vector<std::string> violated;  // "grounding", "budget", "floor"
};

AdmissibilityReport check_discrete_admissible(const DiscreteControl& c,
                                              const AdmissibilityParams& p);

// Zero-sum projection of U, floor at σ₀, then shift-scale towards (σ₀, 0)
// until the norm budget holds. Throws InfeasibleBase when even σ ≡ σ₀, U = 0
// exceeds the budget.
DiscreteControl restore_feasibility(const DiscreteControl& c, const AdmissibilityParams& p);

double grounding_tolerance(const std::vector<double>& U);

}  // namespace cemfd
