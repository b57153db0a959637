#include "cemfd/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "cemfd/errors.hpp"
#include "cemfd/quadrature.hpp"

namespace cemfd {

namespace {

const std::map<std::string, StudyCheck>& check_names() {
  static const std::map<std::string, StudyCheck> names{
      {"energy", StudyCheck::Energy},
      {"steklov_lemma", StudyCheck::SteklovLemma},
      {"pmap_norm", StudyCheck::PmapNorm},
      {"weak_identity", StudyCheck::WeakIdentity},
      {"state_convergence", StudyCheck::StateConvergence},
      {"functional_convergence", StudyCheck::FunctionalConvergence},
      {"interp_equivalence", StudyCheck::InterpEquivalence},
  };
  return names;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kHolderExponent = 0.5;

struct Shared {
  const StudyConfig* cfg = nullptr;
  const ReferenceState* ref = nullptr;
  CurrentPattern I;
  Measurement U_star;
  double J = kNaN;
};

double holder_quotient(const GridFunction& s) {
  const Lattice& lat = s.lattice();
  const int n = lat.dim();
  double best = 0.0;
  for (std::size_t id = 0; id < lat.node_count(); ++id) {
    const MultiIndex& a = lat.node(static_cast<int>(id));
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      MultiIndex b = a;
      int k = 0;
      for (int i = 0; i < n; ++i) {
        if (mask & (1u << i)) {
          b[static_cast<std::size_t>(i)] += 1;
          ++k;
        }
      }
      int j = lat.node_id(b);
      if (j < 0) continue;
      double dist = lat.h() * std::sqrt(static_cast<double>(k));
      best = std::max(best, std::abs(s[j] - s[static_cast<int>(id)]) / std::pow(dist, kHolderExponent));
    }
  }
  return best;
}

std::vector<double> level_row(const Shared& sh, double h) {
  const StudyConfig& cfg = *sh.cfg;
  const auto& checks = cfg.checks;
  auto has = [&checks](StudyCheck c) { return checks.count(c) > 0; };
  const auto& cols = study_columns();
  std::map<std::string, double> v;
  for (const auto& c : cols) v[c] = kNaN;
  v["h"] = h;

  auto lat = Lattice::build(cfg.spec, cfg.electrodes, h);
  const int n = lat->dim();
  const double hn = std::pow(h, n);
  DiscreteControl c{steklov_discretize(cfg.sigma, lat), cfg.U};
  StiffnessSystem sys = assemble(lat, c);
  SolveReport rep = solve(sys, cfg.solver_tol);
  v["nodes"] = static_cast<double>(lat->node_count());
  v["iterations"] = rep.iterations;
  v["residual"] = rep.rhs_norm > 0.0 ? rep.residual_norm / rep.rhs_norm : 0.0;

  double shat = 0.0;
  for (std::size_t k = 0; k < lat->boundary_hat().size(); ++k) shat += std::pow(h, n - 1);
  v["shat_ratio"] = shat / boundary_perimeter(cfg.spec);
  v["pair_strengthened"] = static_cast<double>(lat->pair_strengthened());
  v["holder"] = holder_quotient(c.sigma);

  GradientBound gb = gradient_interpolant_bound(rep.u);
  v["grad_lhs"] = gb.lhs;
  v["grad_rhs_qplus"] = gb.rhs_qplus;
  v["grad_rhs_edges"] = gb.rhs_edges;
  v["h1_interp"] = interpolant_h1_norm(rep.u);

  if (has(StudyCheck::Energy)) {
    EnergyCheck ec = energy_check(rep, cfg.U, cfg.params.sigma0);
    v["energy_lhs"] = ec.lhs;
    v["energy_rhs"] = ec.rhs;
    double unorm = 0.0;
    for (double x : cfg.U) unorm += x * x;
    v["energy_rhs_nominal"] = ec.M_nominal * std::sqrt(unorm);
  }
  if (sh.ref != nullptr && has(StudyCheck::StateConvergence)) {
    v["l2_err_Q"] = l2_error(rep.u, *sh.ref, ErrorRegion::Q);
    v["l2_err_S"] = l2_error(rep.u, *sh.ref, ErrorRegion::S);
  }
  if (sh.ref != nullptr && has(StudyCheck::FunctionalConvergence)) {
    const double Jh = discrete_cost(*lat, cfg.U, rep.u, sh.I, sh.U_star, cfg.params.beta).total;
    v["Jh"] = Jh;
    v["J"] = sh.J;
    v["gap_i"] = std::abs(Jh - sh.J);
    ReferenceState pref = reference_state(cfg.spec, cfg.electrodes,
                                          ConductivityField::fine_grid(c.sigma), cfg.U,
                                          sh.ref->lattice->h(), cfg.solver_tol);
    const double Jp = continuous_cost(cfg.spec, cfg.electrodes, std::cref(pref), pref.lattice->h(), cfg.U,
                                      sh.I, sh.U_star, cfg.params.beta)
                          .total;
    v["J_pmap"] = Jp;
    v["gap_ii"] = std::abs(Jp - Jh);
  }
  if (has(StudyCheck::SteklovLemma) && cfg.sigma.has_derivatives()) {
    const unsigned mask = n == 2 ? 3u : 7u;
    std::vector<int> axes = n == 2 ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2};
    double lhs = 0.0;
    for (int id : lat->qplus()) {
      double d = mixed_at(c.sigma, id, axes);
      lhs += hn * d * d;
    }
    v["steklov_lhs"] = lhs;
    v["steklov_rhs"] = derivative_l2_squared(cfg.sigma, *lat, mask);
  }
  if (has(StudyCheck::PmapNorm)) {
    double cont = tilde_h1_norm_continuous(c.sigma, Region::Q);
    double diff = cont * cont - tilde_h1_norm_squared(c.sigma);
    v["pmap_diff"] = diff;
    v["pmap_ratio"] = diff / h;
  }
  if (has(StudyCheck::WeakIdentity)) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(std::llround(1.0 / h)));
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      GridFunction eta(lat);
      for (double& x : eta.data()) x = dist(rng);
      double lhs = bilinear_form(c.sigma, rep.u, eta);
      double rhs = linear_form(*lat, cfg.U, eta);
      double scale = weak_identity_scale(c.sigma, rep.u, eta, cfg.U);
      if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    v["weak_identity_err"] = worst;
  }
  if (has(StudyCheck::InterpEquivalence)) {
    TraceGap tg = electrode_trace_gap(rep.u);
    v["interp_gap"] = tg.total;
    v["interp_bound"] = tg.bound;
  }

  std::vector<double> row;
  for (const auto& col : cols) row.push_back(v[col]);
  return row;
}

bool strictly_decreasing(const std::vector<double>& x) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] < x[i - 1])) return false;
  }
  return true;
}

std::string join_numbers(const std::vector<double>& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += " ";
    s += format_number(x[i]);
  }
  return s;
}

const char* status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Pass:
      return "PASS";
    case VerdictStatus::Fail:
      return "FAIL";
    case VerdictStatus::Vacuous:
      return "VACUOUS";
    case VerdictStatus::Info:
      return "INFO";
  }
  return "INFO";
}

}  // namespace

StudyCheck parse_study_check(const std::string& name) {
  auto it = check_names().find(name);
  if (it == check_names().end()) throw InvalidArgument("unknown study check '" + name + "'");
  return it->second;
}

std::string study_check_name(StudyCheck c) {
  for (const auto& [k, v] : check_names()) {
    if (v == c) return k;
  }
  return "?";
}

double StudyConfig::effective_h_ref() const {
  if (h_ref > 0.0) return h_ref;
  if (h_list.empty()) return 0.0;
  return *std::min_element(h_list.begin(), h_list.end()) / 4.0;
}

void StudyConfig::validate() const {
  spec.validate();
  validate_electrodes(spec, electrodes);
  params.validate();
  const int m = static_cast<int>(electrodes.size());
  if (static_cast<int>(U.size()) != m) throw InvalidArgument("control.U length differs from electrode count");
  if (!consistent_current) {
    CurrentPattern{I}.validate(m);
    Measurement{U_star}.validate(m);
  }
  double sum = 0.0;
  for (double x : U) sum += x;
  if (std::abs(sum) > zero_sum_tolerance(U)) throw InvalidArgument("control.U violates the ground condition");
  if (h_list.empty()) throw InvalidArgument("grid.h_list is empty");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    if (!(h_list[i] > 0.0)) throw InvalidArgument("grid steps must be positive");
    if (i > 0 && !(h_list[i] < h_list[i - 1])) {
      throw InvalidArgument("grid.h_list must be strictly decreasing");
    }
  }
  if (!(effective_h_ref() < h_list.back())) {
    throw InvalidArgument("grid.h_ref must be smaller than the finest grid step");
  }
  if (!(solver_tol > 0.0)) throw InvalidArgument("solver.tol must be positive");
  if (threads < 1) throw InvalidArgument("thread count must be positive");
}

double ReferenceState::operator()(const Point& x) const { return multilinear_interpolate(u, x); }

ReferenceState reference_state(const DomainSpec& spec, const std::vector<Electrode>& electrodes,
                               const ConductivityField& sigma, const std::vector<double>& U,
                               double h_ref, double tol) {
  ReferenceState ref;
  ref.lattice = Lattice::build(spec, electrodes, h_ref);
  ref.sigma = steklov_discretize(sigma, ref.lattice);
  DiscreteControl c{ref.sigma, U};
  ref.u = solve(assemble(ref.lattice, c), tol).u;
  return ref;
}

double l2_error(const GridFunction& uh, const ReferenceState& ref, ErrorRegion region) {
  const Lattice& fine = *ref.lattice;
  double s = 0.0;
  if (region == ErrorRegion::Q) {
    for (int id : fine.qplus()) {
      for (const auto& q : cell_domain_quadrature(fine.spec(), fine.cell(id), 3)) {
        double d = multilinear_interpolate(uh, q.x) - multilinear_on_cell(ref.u, id, q.x);
        s += q.w * d * d;
      }
    }
  } else {
    const int order = fine.spec().kind == DomainKind::Disk2D ? 6 : 3;
    for (const auto& q : boundary_quadrature(fine.spec(), fine.h(), order)) {
      double d = multilinear_interpolate(uh, q.x) - ref(q.x);
      s += q.w * d * d;
    }
  }
  return std::sqrt(s);
}

const std::vector<std::string>& study_columns() {
  static const std::vector<std::string> cols{
      "h",           "nodes",          "iterations",     "residual",       "l2_err_Q",
      "l2_err_S",    "Jh",             "J",              "gap_i",          "J_pmap",
      "gap_ii",      "energy_lhs",     "energy_rhs",     "energy_rhs_nominal", "steklov_lhs",
      "steklov_rhs", "pmap_diff",      "pmap_ratio",     "weak_identity_err", "interp_gap",
      "interp_bound", "shat_ratio",    "pair_strengthened", "holder",      "grad_lhs",
      "grad_rhs_qplus", "grad_rhs_edges", "h1_interp"};
  return cols;
}

bool ConvergenceReport::all_passed() const {
  return std::none_of(verdicts.begin(), verdicts.end(),
                      [](const Verdict& v) { return v.status == VerdictStatus::Fail; });
}

double loglog_slope(const std::vector<double>& h, const std::vector<double>& value) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < h.size() && i < value.size(); ++i) {
    if (value[i] > 0.0 && h[i] > 0.0 && std::isfinite(value[i])) {
      x.push_back(std::log(h[i]));
      y.push_back(std::log(value[i]));
    }
  }
  if (x.size() < 2) return kNaN;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<Verdict> study_verdicts(const Table& rows, const std::set<StudyCheck>& checks,
                                    int dim) {
  std::vector<Verdict> out;
  const std::size_t levels = rows.rows.size();
  auto col = [&rows, levels](const std::string& name) {
    std::vector<double> v;
    for (std::size_t r = 0; r < levels; ++r) v.push_back(rows.number(r, name));
    return v;
  };
  const auto h = col("h");
  auto has = [&checks](StudyCheck c) { return checks.count(c) > 0; };
  auto monotone = [&](const std::string& name, const std::string& column) {
    auto v = col(column);
    Verdict vd{name, VerdictStatus::Vacuous, join_numbers(v)};
    if (levels >= 2) vd.status = strictly_decreasing(v) ? VerdictStatus::Pass : VerdictStatus::Fail;
    out.push_back(vd);
    out.push_back({name + "_slope", VerdictStatus::Info, format_number(loglog_slope(h, v))});
  };
  auto ratio = [&](const std::string& name, const std::string& column, double limit) {
    auto v = col(column);
    Verdict vd{name, VerdictStatus::Vacuous, ""};
    if (levels >= 2) {
      double r = v.back() / v.front();
      vd.detail = "finest/coarsest = " + format_number(r) + " (limit " + format_number(limit) + ")";
      vd.status = r <= limit ? VerdictStatus::Pass : VerdictStatus::Fail;
    }
    out.push_back(vd);
  };

  {
    auto s = col("shat_ratio");
    const double cap = static_cast<double>(1 << dim) * 1.1;
    bool ok = std::all_of(s.begin(), s.end(), [cap](double x) { return x <= cap; });
    out.push_back({"shat_measure_bound", ok ? VerdictStatus::Pass : VerdictStatus::Fail, join_numbers(s)});
    out.push_back({"holder_quotient", VerdictStatus::Info, join_numbers(col("holder"))});
    auto gl = col("grad_lhs");
    auto ge = col("grad_rhs_edges");
    auto gq = col("grad_rhs_qplus");
    bool edges_ok = true;
    bool qplus_ok = true;
    for (std::size_t i = 0; i < levels; ++i) {
      edges_ok = edges_ok && gl[i] <= ge[i] * (1.0 + 1e-12);
      qplus_ok = qplus_ok && gl[i] <= gq[i] * (1.0 + 1e-12);
    }
    out.push_back({"gradient_interpolant_bound", edges_ok ? VerdictStatus::Pass : VerdictStatus::Fail,
                   "all edges"});
    out.push_back({"gradient_interpolant_bound_qplus", VerdictStatus::Info,
                   qplus_ok ? "holds" : "violated"});
    out.push_back({"h1_interp", VerdictStatus::Info, join_numbers(col("h1_interp"))});
  }
  if (has(StudyCheck::Energy)) {
    auto l = col("energy_lhs");
    auto r = col("energy_rhs");
    bool ok = true;
    for (std::size_t i = 0; i < levels; ++i) ok = ok && l[i] <= r[i];
    out.push_back({"energy_estimate", ok ? VerdictStatus::Pass : VerdictStatus::Fail,
                   join_numbers(l) + " <= " + join_numbers(r)});
  }
  if (has(StudyCheck::WeakIdentity)) {
    auto e = col("weak_identity_err");
    bool ok = std::all_of(e.begin(), e.end(), [](double x) { return x <= 1e-9; });
    out.push_back({"weak_identity", ok ? VerdictStatus::Pass : VerdictStatus::Fail, join_numbers(e)});
  }
  if (has(StudyCheck::StateConvergence)) {
    monotone("state_L2_Q_decreasing", "l2_err_Q");
    monotone("state_L2_S_decreasing", "l2_err_S");
  }
  if (has(StudyCheck::FunctionalConvergence)) {
    monotone("gap_i_decreasing", "gap_i");
    monotone("gap_ii_decreasing", "gap_ii");
    ratio("gap_i_ratio", "gap_i", 0.1);
    ratio("gap_ii_ratio", "gap_ii", 0.1);
  }
  if (has(StudyCheck::InterpEquivalence)) {
    monotone("trace_gap_decreasing", "interp_gap");
    auto g = col("interp_gap");
    auto b = col("interp_bound");
    bool ok = true;
    for (std::size_t i = 0; i < levels; ++i) ok = ok && g[i] <= b[i];
    out.push_back({"trace_gap_bound", ok ? VerdictStatus::Pass : VerdictStatus::Fail,
                   join_numbers(g) + " <= " + join_numbers(b)});
  }
  if (has(StudyCheck::SteklovLemma)) {
    auto l = col("steklov_lhs");
    auto r = col("steklov_rhs");
    if (std::isnan(l.front())) {
      out.push_back({"steklov_bound", VerdictStatus::Vacuous, "field without derivatives"});
    } else {
      bool ok = true;
      std::string detail;
      for (std::size_t i = levels >= 2 ? levels - 2 : 0; i < levels; ++i) {
        ok = ok && l[i] <= 1.05 * r[i] + 1e-14;
        detail += format_number(l[i]) + "<=1.05*" + format_number(r[i]) + " ";
      }
      out.push_back({"steklov_bound", ok ? VerdictStatus::Pass : VerdictStatus::Fail, detail});
    }
  }
  if (has(StudyCheck::PmapNorm)) {
    auto r = col("pmap_ratio");
    Verdict vd{"pmap_constant_stable", VerdictStatus::Vacuous, join_numbers(r)};
    if (levels >= 2) {
      const double c0 = std::max(r.front(), 0.0);
      bool ok = std::all_of(r.begin(), r.end(), [c0](double x) { return x <= 2.0 * c0 + 1e-12; });
      vd.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
    }
    out.push_back(vd);
  }
  return out;
}

ConvergenceReport run_study(const StudyConfig& cfg) {
  cfg.validate();
  const int m = static_cast<int>(cfg.electrodes.size());
  ConvergenceReport report;
  report.rows.header = study_columns();

  auto needs = [&cfg](StudyCheck c) { return cfg.checks.count(c) > 0; };
  Shared sh;
  sh.cfg = &cfg;
  std::optional<ReferenceState> ref;
  if (needs(StudyCheck::StateConvergence) || needs(StudyCheck::FunctionalConvergence)) {
    ref = reference_state(cfg.spec, cfg.electrodes, cfg.sigma, cfg.U, cfg.effective_h_ref(),
                          cfg.solver_tol);
    sh.ref = &*ref;
  }
  if (cfg.consistent_current && ref) {
    std::vector<double> zeros(static_cast<std::size_t>(m), 0.0);
    CostBreakdown flux = continuous_cost(cfg.spec, cfg.electrodes, std::cref(*ref), ref->lattice->h(), cfg.U,
                                         CurrentPattern{zeros}, Measurement{zeros}, 1.0);
    sh.I.I = zero_sum_projection(flux.flux);
    sh.U_star.U_star = cfg.U;
  } else {
    sh.I.I = cfg.I.empty() ? std::vector<double>(static_cast<std::size_t>(m), 0.0) : cfg.I;
    sh.U_star.U_star = cfg.U_star.empty() ? cfg.U : cfg.U_star;
  }
  if (ref) {
    sh.J = continuous_cost(cfg.spec, cfg.electrodes, std::cref(*ref), ref->lattice->h(), cfg.U, sh.I,
                           sh.U_star, cfg.params.beta)
               .total;
  }
  report.I_used = sh.I.I;
  report.U_star_used = sh.U_star.U_star;

  std::vector<std::vector<double>> rows(cfg.h_list.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.threads);
  for (std::size_t start = 0; start < cfg.h_list.size(); start += batch) {
    std::vector<std::future<std::vector<double>>> jobs;
    for (std::size_t k = start; k < std::min(start + batch, cfg.h_list.size()); ++k) {
      jobs.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, level_row,
                                std::cref(sh), cfg.h_list[k]));
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) rows[start + k] = jobs[k].get();
  }
  for (const auto& r : rows) report.rows.add_row(r);
  report.verdicts = study_verdicts(report.rows, cfg.checks, cfg.spec.dim());
  return report;
}

void write_verdicts(std::ostream& os, const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    os << status_name(v.status) << ' ' << v.name;
    if (!v.detail.empty()) os << ": " << v.detail;
    os << '\n';
  }
}

}  // namespace cemfd
