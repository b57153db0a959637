#include "cemfd/forward_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "cemfd/errors.hpp"
#include "cemfd/quadrature.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

int find_root(std::vector<int>& parent, int x) {
  while (parent[static_cast<std::size_t>(x)] != x) {
    auto ux = static_cast<std::size_t>(x);
    parent[ux] = parent[static_cast<std::size_t>(parent[ux])];
    x = parent[ux];
  }
  return x;
}

double z_of(const Lattice& lat, int l) { return lat.electrodes()[static_cast<std::size_t>(l)].z; }

}  // namespace

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1];
         ++k) {
      s += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(k)])];
    }
    y[static_cast<std::size_t>(i)] = s;
  }
}

double SparseMatrix::at(int i, int j) const {
  auto first = col.begin() + row_ptr[static_cast<std::size_t>(i)];
  auto last = col.begin() + row_ptr[static_cast<std::size_t>(i) + 1];
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return val[static_cast<std::size_t>(it - col.begin())];
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) d[static_cast<std::size_t>(i)] = at(i, i);
  return d;
}

double SparseMatrix::asymmetry() const {
  double m = 0.0;
  for (int i = 0; i < rows; ++i) {
    for (int k = row_ptr[static_cast<std::size_t>(i)]; k < row_ptr[static_cast<std::size_t>(i) + 1];
         ++k) {
      int j = col[static_cast<std::size_t>(k)];
      m = std::max(m, std::abs(val[static_cast<std::size_t>(k)] - at(j, i)));
    }
  }
  return m;
}

StiffnessSystem assemble(std::shared_ptr<const Lattice> lattice, const DiscreteControl& c) {
  const Lattice& lat = *lattice;
  if (c.sigma.empty() || c.sigma.size() != lat.node_count()) {
    throw InvalidArgument("conductivity does not live on this lattice");
  }
  if (static_cast<int>(c.U.size()) != lat.electrode_count()) {
    throw InvalidArgument("U has " + std::to_string(c.U.size()) + " entries for " +
                          std::to_string(lat.electrode_count()) + " electrodes");
  }
  const int n = lat.dim();
  const double scale = std::pow(lat.h(), n - 2);
  const auto N = lat.node_count();

  StiffnessSystem sys;
  sys.lattice = lattice;
  sys.U = c.U;
  sys.b.assign(N, 0.0);

  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      bool theta = !lat.in_qplus(id);
      double coeff = (theta ? 1.0 : c.sigma[id]) * scale;
      sys.edges.push_back({id, i, coeff, theta});
    }
  }
  std::sort(sys.edges.begin(), sys.edges.end(), [](const EdgeEntry& a, const EdgeEntry& b) {
    return std::tie(a.node, a.axis) < std::tie(b.node, b.axis);
  });
  for (int l = 0; l < lat.electrode_count(); ++l) {
    const double zinv = 1.0 / z_of(lat, l);
    for (const auto& ec : lat.electrode_cells(l)) {
      sys.mass.push_back({l, ec.node, ec.gamma * zinv});
      sys.b[static_cast<std::size_t>(ec.node)] += c.U[static_cast<std::size_t>(l)] * ec.gamma * zinv;
    }
  }

  std::vector<std::map<int, double>> rows(N);
  for (const auto& e : sys.edges) {
    int j = lat.neighbor(e.node, e.axis);
    auto a = static_cast<std::size_t>(e.node);
    auto b = static_cast<std::size_t>(j);
    rows[a][e.node] += e.coefficient;
    rows[b][j] += e.coefficient;
    rows[a][j] -= e.coefficient;
    rows[b][e.node] -= e.coefficient;
  }
  for (const auto& m : sys.mass) rows[static_cast<std::size_t>(m.node)][m.node] += m.value;

  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& e : sys.edges) {
    int a = find_root(parent, e.node);
    int b = find_root(parent, lat.neighbor(e.node, e.axis));
    if (a != b) parent[static_cast<std::size_t>(a)] = b;
  }
  std::vector<char> grounded(N, 0);
  for (const auto& m : sys.mass) grounded[static_cast<std::size_t>(find_root(parent, m.node))] = 1;
  for (std::size_t id = 0; id < N; ++id) {
    if (!grounded[static_cast<std::size_t>(find_root(parent, static_cast<int>(id)))]) {
      throw DisconnectedSystem("node " + std::to_string(id) +
                               " lies in a component without electrode contact");
    }
  }

  SparseMatrix& A = sys.A;
  A.rows = static_cast<int>(N);
  A.row_ptr.assign(N + 1, 0);
  for (std::size_t i = 0; i < N; ++i) {
    for (const auto& [j, v] : rows[i]) {
      A.col.push_back(j);
      A.val.push_back(v);
    }
    A.row_ptr[i + 1] = static_cast<int>(A.col.size());
  }
  return sys;
}

CgResult conjugate_gradient(const SparseMatrix& A, std::span<const double> b, double tol) {
  const auto N = static_cast<std::size_t>(A.rows);
  CgResult res;
  res.x.assign(N, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) return res;
  const double target = tol * bnorm;
  auto dinv = A.diagonal();
  for (double& d : dinv) d = 1.0 / d;

  std::vector<double> r(b.begin(), b.end());
  std::vector<double> z(N);
  std::vector<double> p(N);
  std::vector<double> q(N);
  const int max_iters = 10 * A.rows;
  int it = 0;
  while (true) {
    // (Re)start from the true residual.
    A.multiply(res.x, q);
    for (std::size_t i = 0; i < N; ++i) r[i] = b[i] - q[i];
    res.residual_norm = norm2(r);
    if (res.residual_norm <= target) break;
    if (it >= max_iters) {
      throw NoConvergence("CG stopped at relative residual " +
                          format_number(res.residual_norm / bnorm) + " after " +
                          std::to_string(it) + " iterations");
    }
    for (std::size_t i = 0; i < N; ++i) z[i] = dinv[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (it < max_iters) {
      A.multiply(p, q);
      double alpha = rz / dot(p, q);
      for (std::size_t i = 0; i < N; ++i) {
        res.x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++it;
      if (norm2(r) <= target) break;
      for (std::size_t i = 0; i < N; ++i) z[i] = dinv[i] * r[i];
      double rz_next = dot(r, z);
      double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  res.iterations = it;
  return res;
}

SolveReport solve(const StiffnessSystem& sys, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  CgResult cg = conjugate_gradient(sys.A, sys.b, tol);
  SolveReport rep;
  rep.u = GridFunction(sys.lattice, std::move(cg.x));
  rep.iterations = cg.iterations;
  rep.residual_norm = cg.residual_norm;
  rep.rhs_norm = norm2(sys.b);
  rep.cg_tolerance = tol;
  rep.energy_lhs = discrete_norm(rep.u, NormKind::TripleH1);
  rep.energy_rhs = std::nan("");
  return rep;
}

EnergyCheck energy_constants(const Lattice& lat, double sigma0) {
  double zinv_min = INFINITY;
  double zinv_max = 0.0;
  for (const auto& e : lat.electrodes()) {
    zinv_min = std::min(zinv_min, 1.0 / e.z);
    zinv_max = std::max(zinv_max, 1.0 / e.z);
  }
  EnergyCheck ec;
  const double root = std::sqrt(boundary_perimeter(lat.spec()));
  ec.mu_nominal = std::min(sigma0, zinv_min);
  ec.mu_prime = std::min(ec.mu_nominal, 1.0);
  ec.M_nominal = root * zinv_max / ec.mu_nominal;
  ec.M_prime = root * zinv_max / ec.mu_prime;
  return ec;
}

EnergyCheck energy_check(SolveReport& report, const std::vector<double>& U, double sigma0) {
  EnergyCheck ec = energy_constants(report.u.lattice(), sigma0);
  ec.lhs = report.energy_lhs;
  ec.rhs = ec.M_prime * norm2(U);
  ec.pass = ec.lhs <= ec.rhs;
  report.energy_rhs = ec.rhs;
  return ec;
}

double interpolate_state(const GridFunction& u, StateInterpolation kind, const Point& x,
                         int axis) {
  const Lattice& lat = u.lattice();
  if (kind == StateInterpolation::Multilinear) return multilinear_interpolate(u, x);
  auto cell = lat.find_cell(x, true);
  if (!cell) throw PointOutsideLattice("point outside Q_h");
  if (kind == StateInterpolation::PiecewiseConstant) return u[*cell];
  if (axis < 0 || axis >= lat.dim()) throw InvalidArgument("axis out of range");
  return diff_at(u, *cell, axis);
}

double bilinear_form(const GridFunction& sigma, const GridFunction& u, const GridFunction& eta) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double hn = std::pow(lat.h(), n);
  double cells = 0.0;
  for (int id : lat.qplus()) {
    const MultiIndex& a = lat.node(id);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += forward_difference(u, a, i) * forward_difference(eta, a, i);
    cells += sigma[id] * s;
  }
  double mass = 0.0;
  for (int l = 0; l < lat.electrode_count(); ++l) {
    double part = 0.0;
    for (const auto& ec : lat.electrode_cells(l)) part += ec.gamma * u[ec.node] * eta[ec.node];
    mass += part / z_of(lat, l);
  }
  double jh = 0.0;
  for (int id : lat.boundary_nodes()) {
    const MultiIndex& a = lat.node(id);
    for (int i = 0; i < n; ++i) {
      bool theta = lat.node_id(a.shifted(i)) >= 0 && !lat.in_qplus(id);
      if (theta) jh += forward_difference(u, a, i) * forward_difference(eta, a, i);
    }
  }
  return hn * cells + mass + hn * jh;
}

double linear_form(const Lattice& lat, const std::vector<double>& U, const GridFunction& eta) {
  double s = 0.0;
  for (int l = 0; l < lat.electrode_count(); ++l) {
    double part = 0.0;
    for (const auto& ec : lat.electrode_cells(l)) part += ec.gamma * eta[ec.node];
    s += U[static_cast<std::size_t>(l)] / z_of(lat, l) * part;
  }
  return s;
}

double weak_identity_scale(const GridFunction& sigma, const GridFunction& u,
                           const GridFunction& eta, const std::vector<double>& U) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double hn = std::pow(lat.h(), n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      double coeff = lat.in_qplus(id) ? std::abs(sigma[id]) : 1.0;
      s += hn * coeff * std::abs(diff_at(u, id, i) * diff_at(eta, id, i));
    }
  }
  for (int l = 0; l < lat.electrode_count(); ++l) {
    for (const auto& ec : lat.electrode_cells(l)) {
      s += ec.gamma / z_of(lat, l) *
           (std::abs(u[ec.node] * eta[ec.node]) +
            std::abs(U[static_cast<std::size_t>(l)] * eta[ec.node]));
    }
  }
  return s;
}

TraceGap electrode_trace_gap(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double h = lat.h();
  TraceGap gap;
  const int order = lat.spec().kind == DomainKind::Disk2D ? 8 : 3;
  for (int l = 0; l < lat.electrode_count(); ++l) {
    double s = 0.0;
    for (const auto& q : patch_quadrature(lat.spec(), lat.electrodes()[static_cast<std::size_t>(l)],
                                          h, order)) {
      auto cell = lat.find_cell(q.x, true);
      if (!cell) throw PointOutsideLattice("electrode point outside Q_h");
      double d = u[*cell] - multilinear_on_cell(u, *cell, q.x);
      s += q.w * d * d;
    }
    gap.per_electrode.push_back(s);
    gap.total += s;
  }
  std::vector<double> per_cell(lat.node_count(), 0.0);
  for (int l = 0; l < lat.electrode_count(); ++l) {
    for (const auto& ec : lat.electrode_cells(l)) per_cell[static_cast<std::size_t>(ec.node)] += ec.gamma;
  }
  gap.L = *std::max_element(per_cell.begin(), per_cell.end()) / std::pow(h, n - 1);
  double edges = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      double d = diff_at(u, id, i);
      edges += std::pow(h, n + 1) * d * d;
    }
  }
  gap.bound = gap.L * ((1 << n) - 1) * (1 << (n - 1)) * n * edges;
  return gap;
}

GradientBound gradient_interpolant_bound(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double hn = std::pow(lat.h(), n);
  GradientBound gb;
  for (int id : lat.qplus()) {
    for (const auto& q : cell_domain_quadrature(lat.spec(), lat.cell(id), 2)) {
      for (int i = 0; i < n; ++i) {
        double d = multilinear_partial_on_cell(u, id, q.x, 1u << i);
        gb.lhs += q.w * d * d;
      }
    }
  }
  const double factor = static_cast<double>(1 << (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      double d = diff_at(u, id, i);
      gb.rhs_edges += factor * hn * d * d;
      if (lat.in_qplus(id)) gb.rhs_qplus += factor * hn * d * d;
    }
  }
  return gb;
}

double interpolant_h1_norm(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  double s = 0.0;
  for (int id : lat.qplus()) {
    for (const auto& q : cell_domain_quadrature(lat.spec(), lat.cell(id), 2)) {
      double v = multilinear_on_cell(u, id, q.x);
      s += q.w * v * v;
      for (int i = 0; i < n; ++i) {
        double d = multilinear_partial_on_cell(u, id, q.x, 1u << i);
        s += q.w * d * d;
      }
    }
  }
  return std::sqrt(s);
}

}  // namespace cemfd
