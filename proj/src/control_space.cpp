#include "cemfd/control_space.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "cemfd/errors.hpp"
#include "cemfd/quadrature.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

// Differences D_S σ_α of the cell for every axis subset S, indexed by mask.
std::array<double, 8> cell_differences(const GridFunction& sigma, int corner) {
  const Lattice& lat = sigma.lattice();
  const int n = lat.dim();
  std::array<double, 8> c{};
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    int node = corner;
    for (int i = 0; i < n && node >= 0; ++i) {
      if (mask & (1u << i)) node = lat.neighbor(node, i);
    }
    if (node < 0) throw PointOutsideLattice("cell corner missing from Q_h");
    c[mask] = sigma[node];
  }
  std::array<double, 8> d{};
  for (unsigned s = 0; s < (1u << n); ++s) {
    double sum = 0.0;
    for (unsigned t = s;; t = (t - 1) & s) {
      sum += ((std::popcount(s) - std::popcount(t)) % 2 == 0 ? 1.0 : -1.0) * c[t];
      if (t == 0) break;
    }
    d[s] = sum / std::pow(lat.h(), std::popcount(s));
  }
  return d;
}

double partial_from_differences(const std::array<double, 8>& d, int n,
                                const std::array<double, 3>& t, unsigned mask) {
  double sum = 0.0;
  for (unsigned s = 0; s < (1u << n); ++s) {
    if ((s & mask) != mask) continue;
    double term = d[s];
    for (int j = 0; j < n; ++j) {
      if ((s & ~mask) & (1u << j)) term *= t[static_cast<std::size_t>(j)];
    }
    sum += term;
  }
  return sum;
}

std::array<double, 3> local_offsets(const Lattice& lat, int corner, const Point& x) {
  Point lo = lat.point(corner);
  return {x[0] - lo[0], x[1] - lo[1], x[2] - lo[2]};
}

// Breakpoints of [lo, lo + h] at the domain planes along one axis.
std::vector<double> axis_pieces(const DomainSpec& spec, int axis, double lo, double h) {
  std::vector<double> cuts{lo};
  if (spec.kind != DomainKind::Disk2D) {
    for (double c : {0.0, spec.widths[static_cast<std::size_t>(axis)]}) {
      if (c > lo && c < lo + h) cuts.push_back(c);
    }
  }
  cuts.push_back(lo + h);
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

// ∫ f over the cell, composite Gauss rule with `sub` panels per axis and piece.
template <class F>
double composite_cell_integral(const DomainSpec& spec, const Cell& cell, int n, int sub, int order,
                               const F& f) {
  std::array<std::vector<double>, 3> edges;
  for (int i = 0; i < 3; ++i) {
    auto ui = static_cast<std::size_t>(i);
    if (i >= n) {
      edges[ui] = {0.0, 1.0};
      continue;
    }
    auto pieces = axis_pieces(spec, i, cell.lo[ui], cell.h);
    for (std::size_t p = 0; p + 1 < pieces.size(); ++p) {
      double w = (pieces[p + 1] - pieces[p]) / sub;
      for (int k = 0; k < sub; ++k) edges[ui].push_back(pieces[p] + k * w);
    }
    edges[ui].push_back(pieces.back());
  }
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < edges[0].size(); ++a) {
    for (std::size_t b = 0; b + 1 < edges[1].size(); ++b) {
      for (std::size_t c = 0; c + 1 < edges[2].size(); ++c) {
        Point lo{edges[0][a], edges[1][b], n == 3 ? edges[2][c] : 0.0};
        Point size{edges[0][a + 1] - lo[0], edges[1][b + 1] - lo[1],
                   n == 3 ? edges[2][c + 1] - lo[2] : 0.0};
        for (const auto& q : box_quadrature(lo, size, n, order)) total += q.w * f(q.x);
      }
    }
  }
  return total;
}

double norm_squared_budget(const GridFunction& sigma, const std::vector<double>& U) {
  double u2 = 0.0;
  for (double v : U) u2 += v * v;
  return tilde_h1_norm_squared(sigma) + u2;
}

}  // namespace

ConductivityField ConductivityField::constant(double c) {
  if (!std::isfinite(c)) throw InvalidArgument("constant conductivity must be finite");
  ConductivityField f;
  f.kind_ = Kind::Constant;
  f.background_ = c;
  return f;
}

ConductivityField ConductivityField::bumps(const DomainSpec& spec, double background,
                                           std::vector<Bump> bumps) {
  spec.validate();
  for (const auto& b : bumps) {
    if (!(b.radius > 0.0)) throw InvalidArgument("bump radius must be positive");
  }
  ConductivityField f;
  f.kind_ = Kind::Analytic;
  f.spec_ = spec;
  f.has_spec_ = true;
  f.background_ = background;
  f.bumps_ = std::move(bumps);
  return f;
}

ConductivityField ConductivityField::fine_grid(GridFunction sample) {
  if (sample.empty()) throw InvalidArgument("fine-grid conductivity needs a sample");
  ConductivityField f;
  f.kind_ = Kind::FineGridSample;
  f.spec_ = sample.lattice().spec();
  f.has_spec_ = true;
  f.sample_ = std::make_shared<const GridFunction>(std::move(sample));
  return f;
}

ConductivityField ConductivityField::phantom(const std::string& name, const DomainSpec& spec,
                                             double background, const Bump& bump) {
  if (name == "constant") return constant(background);
  if (name == "bump") return bumps(spec, background, {bump});
  if (name == "two-bumps") {
    const int n = spec.dim();
    Point lo{0.0, 0.0, 0.0};
    Point w = spec.widths;
    if (spec.kind == DomainKind::Disk2D) {
      lo = {-spec.radius, -spec.radius, 0.0};
      w = {2.0 * spec.radius, 2.0 * spec.radius, 0.0};
    }
    double wmin = std::min(w[0], w[1]);
    if (n == 3) wmin = std::min(wmin, w[2]);
    const std::array<double, 3> f1{0.3, 0.35, 0.4};
    const std::array<double, 3> f2{0.7, 0.65, 0.6};
    Bump b1;
    Bump b2;
    for (int i = 0; i < n; ++i) {
      auto ui = static_cast<std::size_t>(i);
      b1.center[ui] = lo[ui] + f1[ui] * w[ui];
      b2.center[ui] = lo[ui] + f2[ui] * w[ui];
    }
    b1.radius = b2.radius = 0.15 * wmin;
    b1.amplitude = 1.0;
    b2.amplitude = 0.5;
    return bumps(spec, background, {b1, b2});
  }
  throw InvalidArgument("unknown phantom '" + name + "'");
}

namespace {

// Bumps extend by coordinate clamping on boxes and by the Gaussians themselves
// outside the disk.
Point analytic_argument(const DomainSpec& spec, const Point& x) {
  return spec.kind == DomainKind::Disk2D ? x : clamp_to_domain(spec, x);
}

}  // namespace

double ConductivityField::operator()(const Point& x) const {
  switch (kind_) {
    case Kind::Constant:
      return background_;
    case Kind::Analytic: {
      Point y = analytic_argument(spec_, x);
      double v = background_;
      for (const auto& b : bumps_) {
        double r2 = 0.0;
        for (int i = 0; i < spec_.dim(); ++i) {
          double d = y[static_cast<std::size_t>(i)] - b.center[static_cast<std::size_t>(i)];
          r2 += d * d;
        }
        v += b.amplitude * std::exp(-r2 / (b.radius * b.radius));
      }
      return v;
    }
    case Kind::FineGridSample:
      return multilinear_interpolate(*sample_, clamp_to_domain(spec_, x));
  }
  return 0.0;
}

double ConductivityField::derivative(const Point& x, unsigned mask) const {
  if (mask == 0) return (*this)(x);
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::FineGridSample:
      throw InvalidArgument("fine-grid conductivity has no analytic derivatives");
    case Kind::Analytic:
      break;
  }
  const int n = spec_.dim();
  for (int i = 0; i < n; ++i) {
    auto ui = static_cast<std::size_t>(i);
    if ((mask & (1u << i)) && spec_.kind != DomainKind::Disk2D &&
        (x[ui] < 0.0 || x[ui] > spec_.widths[ui])) {
      return 0.0;
    }
  }
  Point y = analytic_argument(spec_, x);
  double v = 0.0;
  for (const auto& b : bumps_) {
    double r2 = 0.0;
    double factor = 1.0;
    const double rho2 = b.radius * b.radius;
    for (int i = 0; i < n; ++i) {
      auto ui = static_cast<std::size_t>(i);
      double d = y[ui] - b.center[ui];
      r2 += d * d;
      if (mask & (1u << i)) factor *= -2.0 * d / rho2;
    }
    v += b.amplitude * std::exp(-r2 / rho2) * factor;
  }
  return v;
}

double ConductivityField::lower_bound_estimate(int samples_per_axis) const {
  if (kind_ == Kind::Constant) return background_;
  if (kind_ == Kind::FineGridSample) {
    auto v = sample_->values();
    return *std::min_element(v.begin(), v.end());
  }
  const int n = spec_.dim();
  Point lo{0.0, 0.0, 0.0};
  Point w = spec_.widths;
  if (spec_.kind == DomainKind::Disk2D) {
    lo = {-spec_.radius, -spec_.radius, 0.0};
    w = {2.0 * spec_.radius, 2.0 * spec_.radius, 0.0};
  }
  double m = INFINITY;
  const int s = samples_per_axis;
  for (int a = 0; a <= s; ++a) {
    for (int b = 0; b <= s; ++b) {
      for (int c = 0; c <= (n == 3 ? s : 0); ++c) {
        Point x{lo[0] + w[0] * a / s, lo[1] + w[1] * b / s, n == 3 ? lo[2] + w[2] * c / s : 0.0};
        m = std::min(m, (*this)(x));
      }
    }
  }
  return m;
}

void AdmissibilityParams::validate() const {
  if (!(R > 0.0) || !(sigma0 > 0.0) || !(beta > 0.0)) {
    throw InvalidArgument("R, sigma0 and beta must be strictly positive");
  }
}

GridFunction steklov_discretize(const ConductivityField& sigma,
                                std::shared_ptr<const Lattice> lattice) {
  const Lattice& lat = *lattice;
  const int n = lat.dim();
  const double h = lat.h();
  const double vol = std::pow(h, n);
  GridFunction out(lattice);
  if (sigma.kind() == ConductivityField::Kind::Constant) {
    for (double& v : out.data()) v = sigma.constant_value();
    return out;
  }

  int nested = 0;
  if (sigma.kind() == ConductivityField::Kind::FineGridSample) {
    double ratio = h / sigma.sample().lattice().h();
    double r = std::round(ratio);
    double inv = std::round(1.0 / ratio);
    if (r >= 1.0 && std::abs(ratio - r) < 1e-9 * ratio) {
      nested = static_cast<int>(r);
    } else if (inv >= 1.0 && std::abs(1.0 / ratio - inv) < 1e-9 / ratio) {
      nested = 1;
    }
  }

  auto f = [&sigma](const Point& x) { return sigma(x); };
  for (std::size_t id = 0; id < lat.node_count(); ++id) {
    Cell cell = lat.cell(static_cast<int>(id));
    double value;
    if (nested > 0) {
      value = composite_cell_integral(lat.spec(), cell, n, nested, 2, f) / vol;
    } else {
      value = composite_cell_integral(lat.spec(), cell, n, 1, 4, f) / vol;
      for (int sub = 2; sub <= 16; sub *= 2) {
        double next = composite_cell_integral(lat.spec(), cell, n, sub, 4, f) / vol;
        bool settled = std::abs(next - value) <= 1e-14 * std::max(1.0, std::abs(next));
        value = next;
        if (settled) break;
      }
    }
    out[static_cast<int>(id)] = value;
  }
  return out;
}

double derivative_l2_squared(const ConductivityField& sigma, const Lattice& lat,
                             unsigned mask) {
  auto f = [&sigma, mask](const Point& x) {
    double d = sigma.derivative(x, mask);
    return d * d;
  };
  double total = 0.0;
  for (int id : lat.qplus()) total += composite_cell_integral(lat.spec(), lat.cell(id), lat.dim(), 4, 4, f);
  return total;
}

bool cell_complete(const Lattice& lat, int id) {
  const int n = lat.dim();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    int node = id;
    for (int i = 0; i < n && node >= 0; ++i) {
      if (mask & (1u << i)) node = lat.neighbor(node, i);
    }
    if (node < 0) return false;
  }
  return true;
}

double multilinear_partial_on_cell(const GridFunction& sigma, int corner, const Point& x,
                                   unsigned mask) {
  const Lattice& lat = sigma.lattice();
  auto d = cell_differences(sigma, corner);
  return partial_from_differences(d, lat.dim(), local_offsets(lat, corner, x), mask);
}

double multilinear_on_cell(const GridFunction& sigma, int corner, const Point& x) {
  return multilinear_partial_on_cell(sigma, corner, x, 0);
}

double multilinear_interpolate(const GridFunction& sigma, const Point& x) {
  auto cell = sigma.lattice().find_cell(x, false);
  if (!cell) throw PointOutsideLattice("point outside the lattice cells");
  return multilinear_on_cell(sigma, *cell, x);
}

double tilde_h1_norm_continuous(const GridFunction& sigma, Region region) {
  const Lattice& lat = sigma.lattice();
  const int n = lat.dim();
  // Mixed-derivative masks included in the H̃¹ norm beyond the H¹ part.
  std::vector<unsigned> masks{0u, 1u, 2u};
  if (n == 2) {
    masks.push_back(3u);
  } else {
    masks.insert(masks.end(), {4u, 3u, 5u, 6u, 7u});
  }
  double total = 0.0;
  for (int id : lat.qplus()) {
    Cell cell = lat.cell(id);
    std::vector<QuadPoint> pts = region == Region::Qh
                                     ? box_quadrature(cell.lo, {cell.h, cell.h, cell.h}, n, 2)
                                     : cell_domain_quadrature(lat.spec(), cell, 2);
    auto d = cell_differences(sigma, id);
    for (const auto& q : pts) {
      auto t = local_offsets(lat, id, q.x);
      for (unsigned m : masks) {
        double v = partial_from_differences(d, n, t, m);
        total += q.w * v * v;
      }
    }
  }
  return std::sqrt(total);
}

double grounding_tolerance(const std::vector<double>& U) {
  double s = 0.0;
  for (double v : U) s += std::abs(v);
  return 1e-12 * std::max(1.0, s);
}

AdmissibilityReport check_discrete_admissible(const DiscreteControl& c,
                                              const AdmissibilityParams& p) {
  AdmissibilityReport r;
  double sum = std::accumulate(c.U.begin(), c.U.end(), 0.0);
  if (std::abs(sum) > grounding_tolerance(c.U)) r.violated.push_back("grounding");
  r.slack = p.R * p.R - norm_squared_budget(c.sigma, c.U);
  if (r.slack < 0.0) r.violated.push_back("budget");
  for (double v : c.sigma.values()) {
    if (!(v >= p.sigma0)) {
      r.violated.push_back("floor");
      break;
    }
  }
  r.feasible = r.violated.empty();
  return r;
}

DiscreteControl restore_feasibility(const DiscreteControl& c, const AdmissibilityParams& p) {
  if (check_discrete_admissible(c, p).feasible) return c;
  const Lattice& lat = c.sigma.lattice();
  const double base = std::pow(lat.h(), lat.dim()) * static_cast<double>(lat.node_count()) *
                      p.sigma0 * p.sigma0;
  if (base > p.R * p.R) {
    throw InfeasibleBase("constant control sigma = sigma0 violates the norm budget (" +
                         format_number(base) + " > R^2 = " + format_number(p.R * p.R) + ")");
  }

  DiscreteControl out = c;
  if (!out.U.empty()) {
    double mean = std::accumulate(out.U.begin(), out.U.end(), 0.0) /
                  static_cast<double>(out.U.size());
    for (double& v : out.U) v -= mean;
  }
  for (double& v : out.sigma.data()) v = std::max(v, p.sigma0);
  const double R2 = p.R * p.R;
  if (norm_squared_budget(out.sigma, out.U) <= R2) return out;

  auto scaled = [&](double t) {
    DiscreteControl s = out;
    for (double& v : s.sigma.data()) v = p.sigma0 + t * (v - p.sigma0);
    for (double& v : s.U) v *= t;
    return s;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    double mid = 0.5 * (lo + hi);
    DiscreteControl s = scaled(mid);
    if (norm_squared_budget(s.sigma, s.U) <= R2) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return scaled(lo);
}

}  // namespace cemfd
