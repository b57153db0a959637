#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "cemfd/control_space.hpp"
#include "cemfd/cost.hpp"
#include "cemfd/forward_solver.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

enum class StudyCheck {
  Energy,
  SteklovLemma,
  PmapNorm,
  WeakIdentity,
  StateConvergence,
  FunctionalConvergence,
  InterpEquivalence,
};

StudyCheck parse_study_check(const std::string& name);
std::string study_check_name(StudyCheck c);

struct StudyConfig {
  DomainSpec spec;
  std::vector<Electrode> electrodes;
  ConductivityField sigma = ConductivityField::constant(1.0);
  std::vector<double> U;
  std::vector<double> I;
  std::vector<double> U_star;
  AdmissibilityParams params;
  std::vector<double> h_list;  // strictly decreasing
  double h_ref = 0.0;          // 0 selects min(h_list) / 4
  std::set<StudyCheck> checks;
  // Replace I by the reference currents of (σ, U) and U* by U, so that the
  // continuous cost vanishes at the studied control.
  bool consistent_current = true;
  double solver_tol = 1e-10;
  int threads = 1;
  std::uint64_t seed = 0;

  double effective_h_ref() const;
  void validate() const;
};

// Fine-lattice state with 𝒬_{h_ref}(σ), used as the weak-solution surrogate.
struct ReferenceState {
  std::shared_ptr<const Lattice> lattice;
  GridFunction sigma;
  GridFunction u;

  // Multilinear evaluation at any point of Q.
  double operator()(const Point& x) const;
};

ReferenceState reference_state(const DomainSpec& spec, const std::vector<Electrode>& electrodes,
                               const ConductivityField& sigma, const std::vector<double>& U,
                               double h_ref, double tol);

enum class ErrorRegion { Q, S };

// ‖u′_h − u_ref‖_{L2} over Q (quadrature on the cells of the reference
// lattice) or over S (boundary rule split at the reference planes).
double l2_error(const GridFunction& uh, const ReferenceState& ref, ErrorRegion region);

enum class VerdictStatus { Pass, Fail, Vacuous, Info };

struct Verdict {
  std::string name;
  VerdictStatus status = VerdictStatus::Info;
  std::string detail;
};

struct ConvergenceReport {
  Table rows;  // one row per h, see study_columns()
  std::vector<Verdict> verdicts;
  std::vector<double> I_used;
  std::vector<double> U_star_used;

  bool all_passed() const;
};

const std::vector<std::string>& study_columns();

ConvergenceReport run_study(const StudyConfig& cfg);

// Recomputes the verdicts from the stored rows.
std::vector<Verdict> study_verdicts(const Table& rows, const std::set<StudyCheck>& checks,
                                    int dim);

// Least-squares slope of log(value) against log(h); NaN with fewer than two
// positive values.
double loglog_slope(const std::vector<double>& h, const std::vector<double>& value);

void write_verdicts(std::ostream& os, const std::vector<Verdict>& verdicts);

}  // namespace cemfd
