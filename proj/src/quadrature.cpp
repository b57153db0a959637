#include "cemfd/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "cemfd/errors.hpp"

namespace cemfd {

namespace {

GaussRule compute_rule(int order) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  auto legendre = [order](double x, double& dp) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double p = order == 1 ? x : p1;
    double pm1 = order == 1 ? 1.0 : p0;
    dp = order * (x * p - pm1) / (x * x - 1.0);
    return p;
  };
  for (int i = 0; i < order; ++i) {
    // Newton iteration on P_order from the usual cosine guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const auto idx = static_cast<std::size_t>(order - 1 - i);
    rule.nodes[idx] = 0.5 * (x + 1.0);
    rule.weights[idx] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

void append_segment(std::vector<QuadPoint>& out, const Point& base, int axis, double t0,
                    double t1, const GaussRule& g) {
  const double len = t1 - t0;
  if (len <= 0.0) return;
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    Point x = base;
    x[static_cast<std::size_t>(axis)] = t0 + len * g.nodes[q];
    out.push_back({x, len * g.weights[q]});
  }
}

// Sorted breakpoints of [a, b] at multiples of h.
std::vector<double> split_interval(double a, double b, double h) {
  std::vector<double> cuts{a};
  long k0 = static_cast<long>(std::floor(a / h)) + 1;
  for (long k = k0;; ++k) {
    double t = static_cast<double>(k) * h;
    if (t >= b) break;
    if (t > a) cuts.push_back(t);
  }
  cuts.push_back(b);
  return cuts;
}

void append_rect_patch(std::vector<QuadPoint>& out, const DomainSpec& spec, const Face& face,
                       double a, double b, double a2, double b2, double split_h,
                       const GaussRule& g) {
  Point base{0.0, 0.0, 0.0};
  base[static_cast<std::size_t>(face.axis)] = face_position(spec, face);
  auto tangents = tangent_axes(spec, face);
  auto cuts = split_interval(a, b, split_h);
  if (spec.dim() == 2) {
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      append_segment(out, base, tangents[0], cuts[k], cuts[k + 1], g);
    }
    return;
  }
  auto cuts2 = split_interval(a2, b2, split_h);
  const auto ta = static_cast<std::size_t>(tangents[0]);
  const auto tb = static_cast<std::size_t>(tangents[1]);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    for (std::size_t j = 0; j + 1 < cuts2.size(); ++j) {
      double la = cuts[k + 1] - cuts[k];
      double lb = cuts2[j + 1] - cuts2[j];
      for (std::size_t p = 0; p < g.nodes.size(); ++p) {
        for (std::size_t q = 0; q < g.nodes.size(); ++q) {
          Point x = base;
          x[ta] = cuts[k] + la * g.nodes[p];
          x[tb] = cuts2[j] + lb * g.nodes[q];
          out.push_back({x, la * lb * g.weights[p] * g.weights[q]});
        }
      }
    }
  }
}

void append_arc(std::vector<QuadPoint>& out, double r, double a, double b, double split_h,
                const GaussRule& g) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::vector<double> cuts{a, b};
  auto add = [&](double t) {
    double d = std::fmod(t - a, kTwoPi);
    if (d < 0.0) d += kTwoPi;
    if (a + d > a && a + d < b) cuts.push_back(a + d);
  };
  long kmax = static_cast<long>(std::floor(r / split_h));
  for (long k = -kmax; k <= kmax; ++k) {
    double c = std::clamp(static_cast<double>(k) * split_h / r, -1.0, 1.0);
    double phi = std::acos(c);
    add(phi);
    add(-phi);
    double psi = std::asin(c);
    add(psi);
    add(std::numbers::pi - psi);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double t0 = cuts[k];
    double len = cuts[k + 1] - t0;
    if (len <= 0.0) continue;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      double t = t0 + len * g.nodes[q];
      out.push_back({{r * std::cos(t), r * std::sin(t), 0.0}, r * len * g.weights[q]});
    }
  }
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > 64) throw InvalidArgument("Gauss order must be in [1, 64]");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_rule(order)).first;
  return it->second;
}

std::vector<QuadPoint> box_quadrature(const Point& lo, const Point& size, int n, int order) {
  const GaussRule& g = gauss_legendre(order);
  const std::size_t q = g.nodes.size();
  std::vector<QuadPoint> out;
  std::size_t total = n == 3 ? q * q * q : q * q;
  out.reserve(total);
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      if (n == 2) {
        out.push_back({{lo[0] + size[0] * g.nodes[i], lo[1] + size[1] * g.nodes[j], 0.0},
                       size[0] * size[1] * g.weights[i] * g.weights[j]});
        continue;
      }
      for (std::size_t k = 0; k < q; ++k) {
        out.push_back({{lo[0] + size[0] * g.nodes[i], lo[1] + size[1] * g.nodes[j],
                        lo[2] + size[2] * g.nodes[k]},
                       size[0] * size[1] * size[2] * g.weights[i] * g.weights[j] *
                           g.weights[k]});
      }
    }
  }
  return out;
}

std::vector<QuadPoint> cell_domain_quadrature(const DomainSpec& spec, const Cell& cell,
                                              int order) {
  const int n = spec.dim();
  if (spec.kind != DomainKind::Disk2D) {
    Point lo{0.0, 0.0, 0.0};
    Point size{0.0, 0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      double a = std::max(cell.lo[ui], 0.0);
      double b = std::min(cell.lo[ui] + cell.h, spec.widths[ui]);
      if (b <= a) return {};
      lo[ui] = a;
      size[ui] = b - a;
    }
    return box_quadrature(lo, size, n, order);
  }

  const double r = spec.radius;
  const double y0 = cell.lo[1];
  const double y1 = cell.lo[1] + cell.h;
  const double xa = std::max(cell.lo[0], -r);
  const double xb = std::min(cell.lo[0] + cell.h, r);
  if (xb <= xa) return {};
  std::vector<double> cuts{xa, xb};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      double s = std::sqrt(r * r - y * y);
      for (double x : {-s, s}) {
        if (x > xa && x < xb) cuts.push_back(x);
      }
    }
  }
  if (0.0 > xa && 0.0 < xb) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());

  // Four sub-panels per piece absorb most of the square-root behaviour near x = ±r.
  constexpr int kPanels = 4;
  const GaussRule& outer = gauss_legendre(std::max(order, 8));
  const GaussRule& inner = gauss_legendre(order);
  std::vector<QuadPoint> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double piece = (cuts[k + 1] - cuts[k]) / kPanels;
    if (piece <= 0.0) continue;
    for (int p = 0; p < kPanels; ++p) {
      double x0 = cuts[k] + p * piece;
      for (std::size_t i = 0; i < outer.nodes.size(); ++i) {
        double x = x0 + piece * outer.nodes[i];
        double s = std::sqrt(std::max(0.0, r * r - x * x));
        double lo = std::max(y0, -s);
        double hi = std::min(y1, s);
        if (hi <= lo) continue;
        for (std::size_t j = 0; j < inner.nodes.size(); ++j) {
          out.push_back({{x, lo + (hi - lo) * inner.nodes[j], 0.0},
                         piece * outer.weights[i] * (hi - lo) * inner.weights[j]});
        }
      }
    }
  }
  return out;
}

std::vector<QuadPoint> patch_quadrature(const DomainSpec& spec, const Electrode& e,
                                        double split_h, int order) {
  const GaussRule& g = gauss_legendre(order);
  std::vector<QuadPoint> out;
  if (spec.kind == DomainKind::Disk2D) {
    append_arc(out, spec.radius, e.a, e.b, split_h, g);
  } else {
    append_rect_patch(out, spec, e.face, e.a, e.b, e.a2, e.b2, split_h, g);
  }
  return out;
}

std::vector<QuadPoint> boundary_quadrature(const DomainSpec& spec, double split_h, int order) {
  const GaussRule& g = gauss_legendre(order);
  std::vector<QuadPoint> out;
  if (spec.kind == DomainKind::Disk2D) {
    append_arc(out, spec.radius, 0.0, 2.0 * std::numbers::pi, split_h, g);
    return out;
  }
  const int n = spec.dim();
  for (int axis = 0; axis < n; ++axis) {
    for (bool upper : {false, true}) {
      Face face{axis, upper};
      auto t = tangent_axes(spec, face);
      double b = spec.widths[static_cast<std::size_t>(t[0])];
      double b2 = n == 3 ? spec.widths[static_cast<std::size_t>(t[1])] : 0.0;
      append_rect_patch(out, spec, face, 0.0, b, 0.0, b2, split_h, g);
    }
  }
  return out;
}

}  // namespace cemfd
