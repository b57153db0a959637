#include "cemfd/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "cemfd/errors.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

std::string to_string(const MultiIndex& a, int n) {
  std::string s = "(";
  for (int i = 0; i < n; ++i) {
    if (i) s += ",";
    s += std::to_string(a[static_cast<std::size_t>(i)]);
  }
  return s + ")";
}

int pair_slot(int i, int j) {
  if (i > j) std::swap(i, j);
  if (i == 0 && j == 1) return 0;
  if (i == 0 && j == 2) return 1;
  if (i == 1 && j == 2) return 2;
  throw InvalidArgument("pair axes must be distinct and < 3");
}

}  // namespace

std::shared_ptr<const Lattice> Lattice::build(const DomainSpec& spec,
                                              std::vector<Electrode> electrodes, double h) {
  validate_electrodes(spec, electrodes);
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("lattice step must be positive");

  std::shared_ptr<Lattice> lat(new Lattice());
  lat->spec_ = spec;
  lat->electrodes_ = std::move(electrodes);
  lat->n_ = spec.dim();
  lat->h_ = h;
  const int n = lat->n_;

  // Cell natural-corner scan range, padded by one cell on each side.
  std::array<int, 3> cmin{0, 0, 0};
  std::array<int, 3> cmax{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double lo = spec.kind == DomainKind::Disk2D ? -spec.radius : 0.0;
    double hi = spec.kind == DomainKind::Disk2D ? spec.radius : spec.widths[ui];
    cmin[ui] = static_cast<int>(std::floor(lo / h)) - 1;
    cmax[ui] = static_cast<int>(std::ceil(hi / h)) + 1;
  }
  for (int i = 0; i < 3; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    lat->kmin_[ui] = cmin[ui];
    lat->extent_[ui] = i < n ? cmax[ui] - cmin[ui] + 2 : 1;
  }
  const std::size_t box_size = static_cast<std::size_t>(lat->extent_[0]) *
                               static_cast<std::size_t>(lat->extent_[1]) *
                               static_cast<std::size_t>(lat->extent_[2]);
  lat->box_cell_.assign(box_size, 0);
  std::vector<char> box_node(box_size, 0);

  const int c2max = n == 3 ? cmax[2] : 0;
  const int c2min = n == 3 ? cmin[2] : 0;
  for (int a = cmin[0]; a <= cmax[0]; ++a) {
    for (int b = cmin[1]; b <= cmax[1]; ++b) {
      for (int c = c2min; c <= c2max; ++c) {
        MultiIndex alpha{{a, b, c}};
        Cell cell{lat->point(alpha), h};
        if (!cell_intersects_domain(spec, cell)) continue;
        lat->box_cell_[lat->box_index(alpha)] = 1;
        for (int mask = 0; mask < (1 << n); ++mask) {
          MultiIndex corner = alpha;
          for (int i = 0; i < n; ++i) {
            if (mask & (1 << i)) corner[static_cast<std::size_t>(i)] += 1;
          }
          box_node[lat->box_index(corner)] = 1;
        }
      }
    }
  }

  // Dense numbering in lexicographic order (the box is laid out k1-major).
  lat->box_to_node_.assign(box_size, -1);
  for (std::size_t idx = 0; idx < box_size; ++idx) {
    if (!box_node[idx]) continue;
    std::size_t rest = idx;
    MultiIndex alpha;
    alpha[2] = static_cast<int>(rest % static_cast<std::size_t>(lat->extent_[2])) + lat->kmin_[2];
    rest /= static_cast<std::size_t>(lat->extent_[2]);
    alpha[1] = static_cast<int>(rest % static_cast<std::size_t>(lat->extent_[1])) + lat->kmin_[1];
    rest /= static_cast<std::size_t>(lat->extent_[1]);
    alpha[0] = static_cast<int>(rest) + lat->kmin_[0];
    if (n == 2) alpha[2] = 0;
    lat->box_to_node_[idx] = static_cast<int>(lat->nodes_.size());
    lat->nodes_.push_back(alpha);
  }

  const std::size_t count = lat->nodes_.size();
  lat->plus_.assign(count, {-1, -1, -1});
  lat->qplus_flag_.assign(count, 0);
  for (std::size_t id = 0; id < count; ++id) {
    const MultiIndex& alpha = lat->nodes_[id];
    for (int i = 0; i < n; ++i) {
      lat->plus_[id][static_cast<std::size_t>(i)] = lat->node_id(alpha.shifted(i));
    }
    if (lat->box_cell_[lat->box_index(alpha)]) {
      lat->qplus_flag_[id] = 1;
      lat->qplus_.push_back(static_cast<int>(id));
    }
    for (int i = 0; i < n; ++i) {
      if (lat->plus_[id][static_cast<std::size_t>(i)] >= 0) {
        lat->dir_[static_cast<std::size_t>(i)].push_back(static_cast<int>(id));
      }
    }
    if (n == 3) {
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          MultiIndex diag = alpha.shifted(i).shifted(j);
          if (lat->node_id(diag) < 0) continue;
          bool full = lat->plus_[id][static_cast<std::size_t>(i)] >= 0 &&
                      lat->plus_[id][static_cast<std::size_t>(j)] >= 0;
          if (full) {
            lat->pair_[static_cast<std::size_t>(pair_slot(i, j))].push_back(static_cast<int>(id));
          } else {
            ++lat->pair_strengthened_;
          }
        }
      }
    }

    // A lattice point is interior to Q_h iff all 2^n incident cells belong to Q_h.
    bool interior = true;
    for (int mask = 0; mask < (1 << n) && interior; ++mask) {
      MultiIndex corner = alpha;
      for (int i = 0; i < n; ++i) {
        if (mask & (1 << i)) corner[static_cast<std::size_t>(i)] -= 1;
      }
      interior = lat->in_box(corner) && lat->box_cell_[lat->box_index(corner)];
    }
    if (!interior) lat->boundary_.push_back(static_cast<int>(id));
  }

  lat->electrode_cells_.assign(lat->electrodes_.size(), {});
  for (int id : lat->qplus_) {
    Cell cell = lat->cell(id);
    if (cell_meets_boundary(spec, cell)) lat->boundary_hat_.push_back(id);
    for (std::size_t l = 0; l < lat->electrodes_.size(); ++l) {
      double gamma = electrode_cell_measure(spec, lat->electrodes_[l], cell).value;
      if (gamma > 0.0) lat->electrode_cells_[l].push_back({id, gamma});
    }
  }
  for (std::size_t l = 0; l < lat->electrode_cells_.size(); ++l) {
    if (lat->electrode_cells_[l].empty()) {
      throw StepTooLarge("electrode " + std::to_string(l + 1) +
                         " receives no lattice cell at h = " + format_number(h));
    }
  }
  return lat;
}

Point Lattice::point(const MultiIndex& alpha) const {
  Point x{0.0, 0.0, 0.0};
  for (int i = 0; i < n_; ++i) {
    x[static_cast<std::size_t>(i)] = alpha[static_cast<std::size_t>(i)] * h_;
  }
  return x;
}

bool Lattice::in_box(const MultiIndex& alpha) const {
  for (int i = 0; i < 3; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    int rel = alpha[ui] - kmin_[ui];
    if (rel < 0 || rel >= extent_[ui]) return false;
  }
  return true;
}

std::size_t Lattice::box_index(const MultiIndex& alpha) const {
  std::size_t idx = static_cast<std::size_t>(alpha[0] - kmin_[0]);
  idx = idx * static_cast<std::size_t>(extent_[1]) + static_cast<std::size_t>(alpha[1] - kmin_[1]);
  idx = idx * static_cast<std::size_t>(extent_[2]) + static_cast<std::size_t>(alpha[2] - kmin_[2]);
  return idx;
}

int Lattice::node_id(const MultiIndex& alpha) const {
  if (n_ == 2 && alpha[2] != 0) return -1;
  if (!in_box(alpha)) return -1;
  return box_to_node_[box_index(alpha)];
}

const std::vector<int>& Lattice::pair(int i, int j) const {
  if (n_ != 3) throw InvalidArgument("pair index sets exist only in 3D");
  return pair_[static_cast<std::size_t>(pair_slot(i, j))];
}

std::optional<int> Lattice::find_cell(const Point& x, bool require_qplus) const {
  std::array<std::array<int, 2>, 3> cand{};
  std::array<int, 3> ncand{1, 1, 1};
  for (int i = 0; i < n_; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    double t = x[ui] / h_;
    double k = std::floor(t);
    double frac = t - k;
    if (frac > 1.0 - 1e-10) {
      k += 1.0;
      frac = 0.0;
    }
    cand[ui][0] = static_cast<int>(k);
    if (frac < 1e-10) {
      cand[ui][1] = static_cast<int>(k) - 1;
      ncand[ui] = 2;
    }
  }
  std::optional<int> fallback;
  for (int a = 0; a < ncand[0]; ++a) {
    for (int b = 0; b < ncand[1]; ++b) {
      for (int c = 0; c < (n_ == 3 ? ncand[2] : 1); ++c) {
        MultiIndex alpha{{cand[0][static_cast<std::size_t>(a)], cand[1][static_cast<std::size_t>(b)],
                          n_ == 3 ? cand[2][static_cast<std::size_t>(c)] : 0}};
        int id = node_id(alpha);
        if (id >= 0 && in_qplus(id)) return id;
        if (require_qplus || fallback || id < 0) continue;
        bool complete = true;
        for (int mask = 1; mask < (1 << n_) && complete; ++mask) {
          MultiIndex corner = alpha;
          for (int i = 0; i < n_; ++i) {
            if (mask & (1 << i)) corner[static_cast<std::size_t>(i)] += 1;
          }
          complete = node_id(corner) >= 0;
        }
        if (complete) fallback = id;
      }
    }
  }
  return fallback;
}

GridFunction::GridFunction(std::shared_ptr<const Lattice> lattice, double fill)
    : lattice_(std::move(lattice)), values_(lattice_->node_count(), fill) {}

GridFunction::GridFunction(std::shared_ptr<const Lattice> lattice, std::vector<double> values)
    : lattice_(std::move(lattice)), values_(std::move(values)) {
  if (values_.size() != lattice_->node_count()) {
    throw InvalidArgument("grid function size does not match the lattice");
  }
}

GridFunction GridFunction::sample(std::shared_ptr<const Lattice> lattice,
                                  const std::function<double(const Point&)>& f) {
  GridFunction g(lattice);
  for (std::size_t id = 0; id < g.size(); ++id) {
    g[static_cast<int>(id)] = f(lattice->point(static_cast<int>(id)));
  }
  return g;
}

double GridFunction::at(const MultiIndex& alpha) const {
  int id = lattice_->node_id(alpha);
  if (id < 0) {
    throw IndexOutOfSet("node " + to_string(alpha, lattice_->dim()) + " is not in Q_h");
  }
  return values_[static_cast<std::size_t>(id)];
}

double diff_at(const GridFunction& u, int id, int axis) {
  return (u[u.lattice().neighbor(id, axis)] - u[id]) / u.lattice().h();
}

double mixed_at(const GridFunction& u, int id, std::span<const int> axes) {
  const Lattice& lat = u.lattice();
  const int m = static_cast<int>(axes.size());
  double sum = 0.0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    int node = id;
    int picked = 0;
    for (int b = 0; b < m; ++b) {
      if (mask & (1 << b)) {
        node = lat.neighbor(node, axes[static_cast<std::size_t>(b)]);
        ++picked;
      }
    }
    sum += ((m - picked) % 2 == 0 ? 1.0 : -1.0) * u[node];
  }
  return sum / std::pow(lat.h(), m);
}

double forward_difference(const GridFunction& u, const MultiIndex& alpha, int axis) {
  const Lattice& lat = u.lattice();
  if (axis < 0 || axis >= lat.dim()) throw InvalidArgument("axis out of range");
  int id = lat.node_id(alpha);
  if (id < 0 || lat.neighbor(id, axis) < 0) {
    throw IndexOutOfSet("forward difference along axis " + std::to_string(axis + 1) +
                        " undefined at " + to_string(alpha, lat.dim()));
  }
  return diff_at(u, id, axis);
}

double mixed_difference(const GridFunction& u, const MultiIndex& alpha,
                        std::span<const int> axes) {
  const Lattice& lat = u.lattice();
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (axes[a] < 0 || axes[a] >= lat.dim()) throw InvalidArgument("axis out of range");
    for (std::size_t b = a + 1; b < axes.size(); ++b) {
      if (axes[a] == axes[b]) throw InvalidArgument("mixed difference axes must be distinct");
    }
  }
  const int m = static_cast<int>(axes.size());
  for (int mask = 0; mask < (1 << m); ++mask) {
    MultiIndex corner = alpha;
    for (int b = 0; b < m; ++b) {
      if (mask & (1 << b)) corner[static_cast<std::size_t>(axes[static_cast<std::size_t>(b)])] += 1;
    }
    if (lat.node_id(corner) < 0) {
      throw IndexOutOfSet("mixed difference stencil at " + to_string(alpha, lat.dim()) +
                          " leaves Q_h");
    }
  }
  return mixed_at(u, lat.node_id(alpha), axes);
}

double tilde_h1_norm_squared(const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double hn = std::pow(lat.h(), n);
  double sum = 0.0;
  for (double v : u.values()) sum += hn * v * v;
  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      double d = diff_at(u, id, i);
      sum += hn * d * d;
    }
  }
  if (n == 2) {
    static constexpr std::array<int, 2> kAxes{0, 1};
    for (int id : lat.qplus()) {
      double d = mixed_at(u, id, kAxes);
      sum += hn * d * d;
    }
    return sum;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const std::array<int, 2> axes{i, j};
      for (int id : lat.pair(i, j)) {
        double d = mixed_at(u, id, axes);
        sum += hn * d * d;
      }
    }
  }
  static constexpr std::array<int, 3> kAll{0, 1, 2};
  for (int id : lat.qplus()) {
    double d = mixed_at(u, id, kAll);
    sum += hn * d * d;
  }
  return sum;
}

double discrete_norm(const GridFunction& u, NormKind kind) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  const double hn = std::pow(lat.h(), n);
  double grad = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int id : lat.dir(i)) {
      double d = diff_at(u, id, i);
      grad += hn * d * d;
    }
  }
  switch (kind) {
    case NormKind::H1: {
      double l2 = 0.0;
      for (double v : u.values()) l2 += hn * v * v;
      return std::sqrt(l2 + grad);
    }
    case NormKind::TripleH1: {
      double mass = 0.0;
      for (int l = 0; l < lat.electrode_count(); ++l) {
        for (const auto& ec : lat.electrode_cells(l)) mass += ec.gamma * u[ec.node] * u[ec.node];
      }
      return std::sqrt(grad + mass);
    }
    case NormKind::TildeH1:
      return std::sqrt(tilde_h1_norm_squared(u));
    case NormKind::Linf: {
      double m = 0.0;
      for (double v : u.values()) m = std::max(m, std::abs(v));
      return m;
    }
  }
  return 0.0;
}

void write_grid_function(std::ostream& os, const GridFunction& u) {
  const Lattice& lat = u.lattice();
  const int n = lat.dim();
  os << (n == 3 ? "k1,k2,k3,value\n" : "k1,k2,value\n");
  for (std::size_t id = 0; id < u.size(); ++id) {
    const MultiIndex& a = lat.node(static_cast<int>(id));
    for (int i = 0; i < n; ++i) os << a[static_cast<std::size_t>(i)] << ',';
    os << format_number(u[static_cast<int>(id)]) << '\n';
  }
}

GridFunction read_grid_function(std::istream& is, std::shared_ptr<const Lattice> lattice) {
  Table table = read_table(is);
  const int n = lattice->dim();
  const std::vector<std::string> expected =
      n == 3 ? std::vector<std::string>{"k1", "k2", "k3", "value"}
             : std::vector<std::string>{"k1", "k2", "value"};
  if (table.header != expected) throw InvalidArgument("unexpected grid function header");
  GridFunction g(lattice, std::nan(""));
  std::vector<char> seen(lattice->node_count(), 0);
  for (const auto& row : table.rows) {
    MultiIndex alpha;
    for (int i = 0; i < n; ++i) {
      double k = parse_number(row[static_cast<std::size_t>(i)]);
      if (k != std::floor(k)) throw InvalidArgument("non-integer lattice index");
      alpha[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }
    int id = lattice->node_id(alpha);
    if (id < 0) throw IndexOutOfSet("node " + to_string(alpha, n) + " is not in Q_h");
    if (seen[static_cast<std::size_t>(id)]) throw InvalidArgument("duplicate node in table");
    seen[static_cast<std::size_t>(id)] = 1;
    g[id] = parse_number(row[static_cast<std::size_t>(n)]);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InvalidArgument("grid function table misses lattice nodes");
  }
  return g;
}

}  // namespace cemfd
