#include "cemfd/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cemfd/errors.hpp"

namespace cemfd {

namespace {

struct Evaluation {
  GridFunction u;
  StiffnessSystem sys;
  CostBreakdown cost;
};

Evaluation evaluate(const std::shared_ptr<const Lattice>& lattice, const DiscreteControl& c,
                    const CurrentPattern& I, const Measurement& U_star, double beta, double tol) {
  Evaluation ev;
  ev.sys = assemble(lattice, c);
  ev.u = solve(ev.sys, tol).u;
  ev.cost = discrete_cost(*lattice, c.U, ev.u, I, U_star, beta);
  return ev;
}

}  // namespace

Gradient adjoint_gradient(const StiffnessSystem& sys, const DiscreteControl& c,
                          const GridFunction& u, const CurrentPattern& I,
                          const Measurement& U_star, double beta, double tol) {
  const Lattice& lat = *sys.lattice;
  const int n = lat.dim();
  const int m = lat.electrode_count();
  Gradient g;
  g.cost = discrete_cost(lat, c.U, u, I, U_star, beta);

  std::vector<double> rhs(lat.node_count(), 0.0);
  for (int l = 0; l < m; ++l) {
    const double zl = lat.electrodes()[static_cast<std::size_t>(l)].z;
    const double w = -2.0 * g.cost.mismatch[static_cast<std::size_t>(l)] / zl;
    for (const auto& ec : lat.electrode_cells(l)) rhs[static_cast<std::size_t>(ec.node)] += w * ec.gamma;
  }
  std::vector<double> lambda = conjugate_gradient(sys.A, rhs, tol).x;
  if (lambda.empty()) lambda.assign(lat.node_count(), 0.0);

  const double scale = std::pow(lat.h(), n - 2);
  g.sigma = GridFunction(sys.lattice, 0.0);
  for (int id : lat.qplus()) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      int j = lat.neighbor(id, i);
      s += (lambda[static_cast<std::size_t>(j)] - lambda[static_cast<std::size_t>(id)]) *
           (u[j] - u[id]);
    }
    g.sigma[id] = -scale * s;
  }
  for (int l = 0; l < m; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const double zl = lat.electrodes()[ul].z;
    double mass = 0.0;
    double lam = 0.0;
    for (const auto& ec : lat.electrode_cells(l)) {
      mass += ec.gamma;
      lam += ec.gamma * lambda[static_cast<std::size_t>(ec.node)];
    }
    g.U.push_back(2.0 * g.cost.mismatch[ul] * mass / zl +
                  2.0 * beta * (c.U[ul] - U_star.U_star[ul]) + lam / zl);
  }
  return g;
}

void OptimizerConfig::validate() const {
  if (max_iters < 0) throw InvalidArgument("optimizer.max_iters must be nonnegative");
  if (!(initial_step > 0.0)) throw InvalidArgument("optimizer.initial_step must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidArgument("optimizer.shrink must be in (0,1)");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw InvalidArgument("optimizer.sufficient_decrease must be in (0,1)");
  }
  if (!(grad_tol > 0.0) || !(cost_tol > 0.0) || !(solver_tol > 0.0)) {
    throw InvalidArgument("optimizer tolerances must be positive");
  }
  if (max_backtracks < 1) throw InvalidArgument("optimizer.max_backtracks must be positive");
}

Reconstruction reconstruct(std::shared_ptr<const Lattice> lattice, const DiscreteControl& init,
                           const CurrentPattern& I, const Measurement& U_star,
                           const AdmissibilityParams& params, const OptimizerConfig& cfg) {
  params.validate();
  cfg.validate();
  const int m = lattice->electrode_count();
  I.validate(m);
  U_star.validate(m);

  Reconstruction out;
  out.control = restore_feasibility(init, params);
  Evaluation ev = evaluate(lattice, out.control, I, U_star, params.beta, cfg.solver_tol);

  auto record = [&](int iter, const Gradient& g, double step) {
    IterateRecord r;
    r.iter = iter;
    r.cost = ev.cost.total;
    r.fidelity = ev.cost.fidelity;
    r.penalty = ev.cost.penalty;
    double s = 0.0;
    for (double v : g.sigma.values()) s += v * v;
    for (double v : zero_sum_projection(g.U)) s += v * v;
    r.gradnorm = std::sqrt(s);
    r.step = step;
    r.slack = check_discrete_admissible(out.control, params).slack;
    out.trace.push_back(r);
  };

  Gradient g = adjoint_gradient(ev.sys, out.control, ev.u, I, U_star, params.beta, cfg.solver_tol);
  record(0, g, 0.0);
  double step = cfg.initial_step;
  for (int iter = 1;; ++iter) {
    const IterateRecord& last = out.trace.back();
    if (last.cost <= cfg.cost_tol) {
      out.reason = "cost_tol";
      break;
    }
    if (last.gradnorm <= cfg.grad_tol) {
      out.reason = "grad_tol";
      break;
    }
    if (iter > cfg.max_iters) {
      out.reason = "max_iters";
      break;
    }
    const std::vector<double> dU = zero_sum_projection(g.U);
    const DiscreteControl previous = out.control;
    bool accepted = false;
    for (int k = 0; k < cfg.max_backtracks; ++k, step *= cfg.shrink) {
      DiscreteControl trial = out.control;
      for (std::size_t a = 0; a < trial.sigma.size(); ++a) {
        trial.sigma[static_cast<int>(a)] -= step * g.sigma[static_cast<int>(a)];
      }
      for (std::size_t l = 0; l < trial.U.size(); ++l) trial.U[l] -= step * dU[l];
      trial = restore_feasibility(trial, params);

      // Predicted decrease along the projected displacement.
      double pred = 0.0;
      for (std::size_t a = 0; a < trial.sigma.size(); ++a) {
        pred += g.sigma[static_cast<int>(a)] *
                (trial.sigma[static_cast<int>(a)] - out.control.sigma[static_cast<int>(a)]);
      }
      for (std::size_t l = 0; l < trial.U.size(); ++l) pred += g.U[l] * (trial.U[l] - out.control.U[l]);

      Evaluation next = evaluate(lattice, trial, I, U_star, params.beta, cfg.solver_tol);
      const double current = ev.cost.total;
      if (next.cost.total < current &&
          next.cost.total <= current + cfg.sufficient_decrease * std::min(pred, 0.0)) {
        out.control = std::move(trial);
        ev = std::move(next);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (out.trace.size() == 1) {
        throw StalledLineSearch("no cost decrease found after " +
                                std::to_string(cfg.max_backtracks) + " backtracking steps");
      }
      out.reason = "stalled";
      break;
    }
    Gradient g_next =
        adjoint_gradient(ev.sys, out.control, ev.u, I, U_star, params.beta, cfg.solver_tol);
    record(iter, g_next, step);

    // Barzilai-Borwein trial step from the accepted displacement.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t a = 0; a < previous.sigma.size(); ++a) {
      const int ia = static_cast<int>(a);
      const double s = out.control.sigma[ia] - previous.sigma[ia];
      ss += s * s;
      sy += s * (g_next.sigma[ia] - g.sigma[ia]);
    }
    const std::vector<double> dU_next = zero_sum_projection(g_next.U);
    for (std::size_t l = 0; l < dU.size(); ++l) {
      const double s = out.control.U[l] - previous.U[l];
      ss += s * s;
      sy += s * (dU_next[l] - dU[l]);
    }
    step = sy > 0.0 ? ss / sy : 2.0 * step;
    g = std::move(g_next);
  }
  return out;
}

std::vector<DirectionCheck> gradient_check(std::shared_ptr<const Lattice> lattice,
                                           const DiscreteControl& c, const CurrentPattern& I,
                                           const Measurement& U_star, double beta,
                                           int directions, double step, std::uint64_t seed,
                                           double tol) {
  Evaluation base = evaluate(lattice, c, I, U_star, beta, tol);
  Gradient g = adjoint_gradient(base.sys, c, base.u, I, U_star, beta, tol);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<DirectionCheck> out;
  for (int k = 0; k < directions; ++k) {
    GridFunction ds(lattice);
    for (double& v : ds.data()) v = dist(rng);
    std::vector<double> dU(c.U.size());
    for (double& v : dU) v = dist(rng);
    dU = zero_sum_projection(dU);

    DirectionCheck dc;
    for (std::size_t a = 0; a < ds.size(); ++a) {
      dc.adjoint += g.sigma[static_cast<int>(a)] * ds[static_cast<int>(a)];
    }
    for (std::size_t l = 0; l < dU.size(); ++l) dc.adjoint += g.U[l] * dU[l];

    auto shifted = [&](double t) {
      DiscreteControl s = c;
      for (std::size_t a = 0; a < ds.size(); ++a) s.sigma[static_cast<int>(a)] += t * ds[static_cast<int>(a)];
      for (std::size_t l = 0; l < dU.size(); ++l) s.U[l] += t * dU[l];
      return evaluate(lattice, s, I, U_star, beta, tol).cost.total;
    };
    dc.finite_difference = (shifted(step) - shifted(-step)) / (2.0 * step);
    double scale = std::max({std::abs(dc.adjoint), std::abs(dc.finite_difference), 1e-300});
    dc.relative_error = std::abs(dc.adjoint - dc.finite_difference) / scale;
    out.push_back(dc);
  }
  return out;
}

SyntheticData synthesize_data(const ConductivityField& truth, const DomainSpec& spec,
                              const std::vector<Electrode>& electrodes, double h_data,
                              const std::vector<double>& U_true, double noise,
                              std::uint64_t seed, double tol) {
  auto lat = Lattice::build(spec, electrodes, h_data);
  DiscreteControl c{steklov_discretize(truth, lat), U_true};
  auto sys = assemble(lat, c);
  auto u = solve(sys, tol).u;
  SyntheticData data;
  std::vector<double> zeros(U_true.size(), 0.0);
  CostBreakdown cb = discrete_cost(*lat, U_true, u, CurrentPattern{zeros}, Measurement{zeros}, 1.0);
  data.I.I = zero_sum_projection(cb.flux);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> ustar = U_true;
  if (noise > 0.0) {
    for (double& v : ustar) v += noise * std::abs(v) * normal(rng);
  }
  data.U_star.U_star = zero_sum_projection(ustar);
  return data;
}

}  // namespace cemfd
