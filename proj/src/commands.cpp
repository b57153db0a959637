#include "cemfd/commands.hpp"

#include <fstream>
#include <functional>
#include <iostream>

#include "cemfd/config.hpp"
#include "cemfd/convergence.hpp"
#include "cemfd/cost.hpp"
#include "cemfd/errors.hpp"
#include "cemfd/forward_solver.hpp"
#include "cemfd/inverse.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

namespace fs = std::filesystem;

int guarded(const char* command, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << command << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << command << ": invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InfeasibleBase& e) {
    std::cerr << command << ": infeasible control set: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StepTooLarge& e) {
    std::cerr << command << ": grid step too large: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << command << ": solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << command << ": unexpected failure: " << e.what() << '\n';
    return kExitSolver;
  }
}

RunConfig load(const CommandOptions& o) {
  RunConfig rc = load_run_config(Config::load(o.config));
  if (o.seed) rc.seed = *o.seed;
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + o.out.string() + "'");
  return rc;
}

void write_grid(const fs::path& path, const GridFunction& g) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  write_grid_function(os, g);
}

void require_floor_and_ground(const DiscreteControl& c, const AdmissibilityParams& p) {
  auto rep = check_discrete_admissible(c, p);
  for (const auto& v : rep.violated) {
    if (v == "grounding") throw ConfigError("control.U violates the ground condition (sum must be 0)");
    if (v == "floor") {
      throw ConfigError("discretized conductivity falls below params.sigma0 = " +
                        format_number(p.sigma0));
    }
    if (v == "budget") {
      std::cerr << "warning: control exceeds the norm budget R (slack " << format_number(rep.slack)
                << ")\n";
    }
  }
}

Table cost_table(const CostBreakdown& cb) {
  Table t;
  t.header = {"total", "fidelity", "penalty"};
  std::vector<double> row{cb.total, cb.fidelity, cb.penalty};
  for (std::size_t l = 0; l < cb.mismatch.size(); ++l) {
    t.header.push_back("mismatch_" + std::to_string(l + 1));
    row.push_back(cb.mismatch[l]);
  }
  t.add_row(row);
  return t;
}

StudyConfig study_config(const RunConfig& rc, const CommandOptions& o) {
  StudyConfig sc;
  sc.spec = rc.spec;
  sc.electrodes = rc.electrodes;
  sc.sigma = rc.field();
  sc.U = rc.U;
  sc.I = rc.I;
  sc.U_star = rc.U_star;
  sc.params = rc.params;
  sc.h_list = rc.h_list;
  sc.h_ref = rc.h_ref;
  sc.checks = rc.checks;
  sc.consistent_current = rc.consistent_current || rc.I.empty();
  sc.solver_tol = rc.solver_tol;
  sc.threads = o.threads;
  sc.seed = rc.seed;
  if (sc.h_ref > 0.0 && !sc.h_list.empty() && !(sc.h_ref < sc.h_list.back())) {
    throw ConfigError("grid.h_ref must be smaller than every grid step");
  }
  try {
    sc.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return sc;
}

int write_study(const ConvergenceReport& report, const fs::path& out, const std::string& prefix) {
  write_table_file((out / (prefix + ".csv")).string(), report.rows);
  std::ofstream os(out / (prefix == "report" ? "verdicts.txt" : prefix + "_verdicts.txt"),
                   std::ios::binary);
  if (!os) throw Error("cannot write verdict file");
  write_verdicts(os, report.verdicts);
  return report.all_passed() ? kExitOk : kExitCheckFailed;
}

}  // namespace

int cmd_forward(const CommandOptions& o) {
  return guarded("forward", [&o]() -> int {
    RunConfig rc = load(o);
    if (rc.I.empty()) throw ConfigError("missing key 'pattern.I'");
    std::vector<double> ustar = rc.U_star.empty() ? rc.U : rc.U_star;
    auto lat = Lattice::build(rc.spec, rc.electrodes, rc.h);
    DiscreteControl c{steklov_discretize(rc.field(), lat), rc.U};
    require_floor_and_ground(c, rc.params);
    StiffnessSystem sys = assemble(lat, c);
    SolveReport rep = solve(sys, rc.solver_tol);
    EnergyCheck ec = energy_check(rep, rc.U, rc.params.sigma0);
    CostBreakdown cb = discrete_cost(*lat, rc.U, rep.u, CurrentPattern{rc.I}, Measurement{ustar},
                                     rc.params.beta);

    write_grid(o.out / "state.csv", rep.u);
    Table log;
    log.header = {"h", "nodes", "iterations", "residual", "energy_lhs", "energy_rhs"};
    log.add_row({rc.h, static_cast<double>(lat->node_count()), static_cast<double>(rep.iterations),
                 rep.rhs_norm > 0.0 ? rep.residual_norm / rep.rhs_norm : 0.0, ec.lhs, ec.rhs});
    write_table_file((o.out / "solve_log.csv").string(), log);
    write_table_file((o.out / "cost.csv").string(), cost_table(cb));
    return kExitOk;
  });
}

int cmd_invert(const CommandOptions& o) {
  return guarded("invert", [&o]() -> int {
    RunConfig rc = load(o);
    ConductivityField truth = rc.field();
    CurrentPattern I;
    Measurement ustar;
    if (rc.invert_data == "synthetic") {
      SyntheticData data = synthesize_data(truth, rc.spec, rc.electrodes, rc.h / rc.invert_refine,
                                           rc.U, rc.invert_noise, rc.seed);
      I = data.I;
      ustar = data.U_star;
    } else {
      if (rc.I.empty() || rc.U_star.empty()) {
        throw ConfigError("invert.data = given needs pattern.I and measurement.Ustar");
      }
      I.I = rc.I;
      ustar.U_star = rc.U_star;
    }
    auto lat = Lattice::build(rc.spec, rc.electrodes, rc.h);
    DiscreteControl init;
    if (rc.invert_init == "truth") {
      init = {steklov_discretize(truth, lat), rc.U};
    } else {
      double s0 = rc.invert_init_sigma > 0.0 ? rc.invert_init_sigma : rc.params.sigma0;
      init = {GridFunction(lat, s0), ustar.U_star};
    }
    Reconstruction r = reconstruct(lat, init, I, ustar, rc.params, rc.optimizer);

    write_grid(o.out / "control_sigma.csv", r.control.sigma);
    Table u;
    u.header = {"l", "U"};
    for (std::size_t l = 0; l < r.control.U.size(); ++l) {
      u.add_row({static_cast<double>(l + 1), r.control.U[l]});
    }
    write_table_file((o.out / "control_U.csv").string(), u);
    Table trace;
    trace.header = {"iter", "cost", "fidelity", "penalty", "gradnorm", "step", "slack"};
    for (const auto& it : r.trace) {
      trace.add_row({static_cast<double>(it.iter), it.cost, it.fidelity, it.penalty, it.gradnorm,
                     it.step, it.slack});
    }
    write_table_file((o.out / "trace.csv").string(), trace);
    std::cerr << "invert: stopped (" << r.reason << ") after " << r.trace.size() - 1
              << " iterations, cost " << format_number(r.trace.front().cost) << " -> "
              << format_number(r.trace.back().cost) << '\n';
    return kExitOk;
  });
}

int cmd_study(const CommandOptions& o) {
  return guarded("study", [&o]() -> int {
    RunConfig rc = load(o);
    StudyConfig sc = study_config(rc, o);
    return write_study(run_study(sc), o.out, "report");
  });
}

int cmd_check(const CommandOptions& o, const std::string& which) {
  return guarded("check", [&o, &which]() -> int {
    RunConfig rc = load(o);
    if (which == "gradient") {
      auto lat = Lattice::build(rc.spec, rc.electrodes, rc.h);
      DiscreteControl c{steklov_discretize(rc.field(), lat), rc.U};
      std::vector<double> I = rc.I.empty() ? std::vector<double>(rc.U.size(), 0.0) : rc.I;
      std::vector<double> ustar = rc.U_star.empty() ? rc.U : rc.U_star;
      auto rows = gradient_check(lat, c, CurrentPattern{I}, Measurement{ustar}, rc.params.beta, 10,
                                 1e-5, rc.seed);
      Table t;
      t.header = {"direction", "adjoint", "finite_difference", "relative_error"};
      bool ok = true;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        t.add_row({static_cast<double>(k + 1), rows[k].adjoint, rows[k].finite_difference,
                   rows[k].relative_error});
        ok = ok && rows[k].relative_error <= 1e-6;
      }
      write_table_file((o.out / "check_gradient.csv").string(), t);
      return ok ? kExitOk : kExitCheckFailed;
    }
    StudyCheck check;
    if (which == "energy") {
      check = StudyCheck::Energy;
    } else if (which == "steklov") {
      check = StudyCheck::SteklovLemma;
    } else if (which == "pmap") {
      check = StudyCheck::PmapNorm;
    } else {
      throw ConfigError("unknown check '" + which + "' (energy, steklov, pmap, gradient)");
    }
    rc.checks = {check};
    StudyConfig sc = study_config(rc, o);
    return write_study(run_study(sc), o.out, "check_" + which);
  });
}

}  // namespace cemfd
