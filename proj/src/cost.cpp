#include "cemfd/cost.hpp"

#include <cmath>
#include <numeric>

#include "cemfd/errors.hpp"
#include "cemfd/quadrature.hpp"
#include "cemfd/table.hpp"

namespace cemfd {

namespace {

void check_length(const std::vector<double>& v, int m, const char* what) {
  if (static_cast<int>(v.size()) != m) {
    throw InvalidArgument(std::string(what) + " has " + std::to_string(v.size()) +
                          " entries, expected " + std::to_string(m));
  }
}

CostBreakdown finish(std::vector<double> flux, const std::vector<double>& U,
                     const CurrentPattern& I, const Measurement& U_star, double beta) {
  CostBreakdown cb;
  cb.flux = std::move(flux);
  for (std::size_t l = 0; l < cb.flux.size(); ++l) {
    double d = cb.flux[l] - I.I[l];
    cb.mismatch.push_back(d);
    cb.fidelity += d * d;
    double e = U[l] - U_star.U_star[l];
    cb.penalty += e * e;
  }
  cb.penalty *= beta;
  cb.total = cb.fidelity + cb.penalty;
  return cb;
}

}  // namespace

double zero_sum_tolerance(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return 1e-12 * std::max(1.0, s);
}

std::vector<double> zero_sum_projection(std::vector<double> v) {
  if (v.empty()) return v;
  double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
  return v;
}

void CurrentPattern::validate(int electrodes) const {
  check_length(I, electrodes, "current pattern I");
  double sum = std::accumulate(I.begin(), I.end(), 0.0);
  if (std::abs(sum) > zero_sum_tolerance(I)) {
    throw InvalidArgument("currents violate conservation of charge: sum of I = " +
                          format_number(sum));
  }
}

void Measurement::validate(int electrodes) const {
  check_length(U_star, electrodes, "measurement U*");
  double sum = std::accumulate(U_star.begin(), U_star.end(), 0.0);
  if (std::abs(sum) > zero_sum_tolerance(U_star)) {
    throw InvalidArgument("measured voltages violate the ground condition: sum of U* = " +
                          format_number(sum));
  }
}

CostBreakdown discrete_cost(const Lattice& lat, const std::vector<double>& U,
                            const GridFunction& u, const CurrentPattern& I,
                            const Measurement& U_star, double beta) {
  const int m = lat.electrode_count();
  check_length(U, m, "U");
  check_length(I.I, m, "current pattern I");
  check_length(U_star.U_star, m, "measurement U*");
  std::vector<double> flux;
  for (int l = 0; l < m; ++l) {
    const double Ul = U[static_cast<std::size_t>(l)];
    double s = 0.0;
    for (const auto& ec : lat.electrode_cells(l)) s += ec.gamma * (Ul - u[ec.node]);
    flux.push_back(s / lat.electrodes()[static_cast<std::size_t>(l)].z);
  }
  return finish(std::move(flux), U, I, U_star, beta);
}

CostBreakdown continuous_cost(const DomainSpec& spec, const std::vector<Electrode>& electrodes,
                              const std::function<double(const Point&)>& u, double split_h,
                              const std::vector<double>& U, const CurrentPattern& I,
                              const Measurement& U_star, double beta) {
  const int m = static_cast<int>(electrodes.size());
  check_length(U, m, "U");
  check_length(I.I, m, "current pattern I");
  check_length(U_star.U_star, m, "measurement U*");
  const int order = spec.kind == DomainKind::Disk2D ? 8 : 4;
  std::vector<double> flux;
  for (int l = 0; l < m; ++l) {
    const auto& e = electrodes[static_cast<std::size_t>(l)];
    const double Ul = U[static_cast<std::size_t>(l)];
    double s = 0.0;
    for (const auto& q : patch_quadrature(spec, e, split_h, order)) s += q.w * (Ul - u(q.x));
    flux.push_back(s / e.z);
  }
  return finish(std::move(flux), U, I, U_star, beta);
}

}  // namespace cemfd
