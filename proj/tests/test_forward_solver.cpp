#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cemfd/control_space.hpp"
#include "cemfd/errors.hpp"
#include "cemfd/forward_solver.hpp"
#include "support.hpp"

using namespace cemfd;
using namespace cemfd::testing;

namespace {

struct Solved {
  std::shared_ptr<const Lattice> lat;
  DiscreteControl c;
  StiffnessSystem sys;
  SolveReport rep;
};

Solved solve_setup(const DomainSpec& spec, const std::vector<Electrode>& el, double h,
                   const GridFunction* sigma, std::vector<double> U, double tol = 1e-10) {
  Solved s;
  s.lat = Lattice::build(spec, el, h);
  s.c = {sigma ? *sigma : GridFunction(s.lat, 1.0), std::move(U)};
  s.sys = assemble(s.lat, s.c);
  s.rep = solve(s.sys, tol);
  return s;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double rel_diff(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Small grids of every geometry, all with at most 200 nodes.
std::vector<std::pair<Setup, double>> small_grids() {
  auto s = all_setups();
  return {{s[0], 0.5}, {s[0], 0.25}, {s[0], 0.125}, {s[1], 0.5}, {s[1], 0.25},
          {s[2], 0.5}, {s[2], 0.25}};
}

}  // namespace

TEST(Assemble, UnitSquareQuadraticFormByHand) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), left_right(), 0.5);
  auto sys = assemble(lat, {GridFunction(lat, 1.0), {1.0, -1.0}});
  ASSERT_EQ(sys.A.rows, 9);
  EXPECT_EQ(sys.A.asymmetry(), 0.0);
  auto u = GridFunction::sample(lat, [](const Point& x) { return x[0]; });
  std::vector<double> Au(9);
  sys.A.multiply(u.values(), Au);
  double form = 0.0;
  for (int i = 0; i < 9; ++i) form += u[i] * Au[static_cast<std::size_t>(i)];
  // Four cells with u_x1 = 1: h^2 * 4 = 1. Two top-row edges outside Q_h⁺
  // with u_x1 = 1 and unit weight: 2 * h^2 = 0.5. Right electrode: natural
  // corners (1,0), (1,1) with Γ = 0.5 and u = 0.5: 2 * 0.5 * 0.25 = 0.25.
  EXPECT_NEAR(form, 1.75, 1e-15);
}

TEST(Assemble, ThetaEdgesOnUnitSquare) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), left_right(), 0.5);
  auto sys = assemble(lat, {GridFunction(lat, 1.0), {0.0, 0.0}});
  std::set<std::tuple<int, int, int>> theta;
  for (const auto& e : sys.edges) {
    if (e.theta) theta.insert({e.axis, lat->node(e.node)[0], lat->node(e.node)[1]});
  }
  std::set<std::tuple<int, int, int>> expected{{0, 0, 2}, {0, 1, 2}, {1, 2, 0}, {1, 2, 1}};
  EXPECT_EQ(theta, expected);
}

TEST(Assemble, LinearInSigma) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), four_sides(), 0.125);
  std::mt19937_64 rng(1);
  auto s = random_grid(lat, rng, 1, 2);
  GridFunction s2(lat);
  for (std::size_t k = 0; k < s.size(); ++k) s2[static_cast<int>(k)] = 2 * s[static_cast<int>(k)];
  auto a = assemble(lat, {s, {1, 0, -1, 0}});
  auto b = assemble(lat, {s2, {1, 0, -1, 0}});
  ASSERT_EQ(a.edges.size(), b.edges.size());
  for (std::size_t k = 0; k < a.edges.size(); ++k) {
    if (a.edges[k].theta) {
      EXPECT_EQ(a.edges[k].coefficient, b.edges[k].coefficient);
    } else {
      EXPECT_EQ(2 * a.edges[k].coefficient, b.edges[k].coefficient);
    }
  }
  ASSERT_EQ(a.mass.size(), b.mass.size());
  for (std::size_t k = 0; k < a.mass.size(); ++k) EXPECT_EQ(a.mass[k].value, b.mass[k].value);
}

TEST(Assemble, RightHandSide) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), four_sides(0.5), 0.25);
  std::vector<double> U{1.0, -2.0, 0.5, 0.5};
  auto sys = assemble(lat, {GridFunction(lat, 1.0), U});
  std::vector<double> b(lat->node_count(), 0.0);
  for (int l = 0; l < 4; ++l) {
    for (const auto& ec : lat->electrode_cells(l)) {
      b[static_cast<std::size_t>(ec.node)] += U[static_cast<std::size_t>(l)] * ec.gamma / 0.5;
    }
  }
  EXPECT_EQ(sys.b, b);
}

TEST(Solve, ZeroVoltagesShortCircuit) {
  auto s = solve_setup(DomainSpec::rect(1, 1), left_right(), 0.125, nullptr, {0.0, 0.0});
  EXPECT_EQ(s.rep.iterations, 0);
  for (double v : s.rep.u.values()) EXPECT_EQ(v, 0.0);
  auto ec = energy_check(s.rep, s.c.U, 1.0);
  EXPECT_EQ(ec.lhs, 0.0);
  EXPECT_TRUE(ec.pass);
}

TEST(Solve, SymmetricPositiveDefiniteAndMatchesDenseFactorization) {
  std::mt19937_64 rng(2);
  for (const auto& [setup, h] : small_grids()) {
    auto lat = Lattice::build(setup.spec, setup.electrodes, h);
    ASSERT_LE(lat->node_count(), 200u);
    auto sigma = random_grid(lat, rng, 1, 3);
    auto U = random_zero_sum(rng, setup.electrodes.size(), 1.0);
    auto sys = assemble(lat, {sigma, U});
    EXPECT_EQ(sys.A.asymmetry(), 0.0);
    Eigen::MatrixXd M = dense(sys.A);
    EXPECT_EQ((M - M.transpose()).cwiseAbs().maxCoeff(), 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    ASSERT_EQ(llt.info(), Eigen::Success) << setup.name << " h=" << h;
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.b.data(), static_cast<Eigen::Index>(sys.b.size()));
    auto direct = to_vec(llt.solve(b));
    auto rep = solve(sys, 1e-10);
    EXPECT_LE(rep.residual_norm, 1e-10 * rep.rhs_norm);
    EXPECT_LE(rel_diff(rep.u.values(), direct), 1e-9) << setup.name << " h=" << h;
  }
}

TEST(Solve, TransposeAntisymmetry) {
  // Electrodes on the left and bottom edges swap under (x1, x2) -> (x2, x1).
  std::vector<Electrode> el{edge_electrode(0, false, 0.25, 0.75), edge_electrode(1, false, 0.25, 0.75)};
  for (double h : {0.25, 0.125, 1.0 / 32}) {
    auto s = solve_setup(DomainSpec::rect(1, 1), el, h, nullptr, {1.0, -1.0}, 1e-12);
    double worst = 0.0, scale = 0.0;
    for (std::size_t id = 0; id < s.lat->node_count(); ++id) {
      MultiIndex a = s.lat->node(static_cast<int>(id));
      MultiIndex t{{a[1], a[0], 0}};
      worst = std::max(worst, std::abs(s.rep.u[static_cast<int>(id)] + s.rep.u.at(t)));
      scale = std::max(scale, std::abs(s.rep.u[static_cast<int>(id)]));
    }
    EXPECT_LE(worst, 1e-9 * scale) << h;
  }
}

TEST(Solve, MirrorDefectVanishesUnderRefinement) {
  double previous = INFINITY;
  for (double h : {0.125, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    auto s = solve_setup(DomainSpec::rect(1, 1), left_right(), h, nullptr, {1.0, -1.0}, 1e-12);
    const int K = static_cast<int>(std::lround(1.0 / h));
    double worst = 0.0;
    for (std::size_t id = 0; id < s.lat->node_count(); ++id) {
      MultiIndex a = s.lat->node(static_cast<int>(id));
      MultiIndex m{{K - a[0], a[1], 0}};
      worst = std::max(worst, std::abs(s.rep.u[static_cast<int>(id)] + s.rep.u.at(m)));
    }
    EXPECT_LT(worst, previous) << h;
    previous = worst;
  }
}

TEST(EnergyEstimate, ConstantForUnitSquare) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), left_right(1.0), 0.25);
  auto ec = energy_constants(*lat, 1.0);
  EXPECT_DOUBLE_EQ(ec.M_prime, 2.0);
  EXPECT_DOUBLE_EQ(ec.M_nominal, 2.0);
}

TEST(EnergyEstimate, RandomAdmissibleControls) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0, 1);
  for (const auto& setup : {all_setups()[0], all_setups()[1]}) {
    for (double h : {0.125, 0.0625}) {
      auto lat = Lattice::build(setup.spec, setup.electrodes, h);
      for (int draw = 0; draw < 100; ++draw) {
        const double sigma0 = 0.2 + 2.0 * unit(rng);
        auto sigma = random_grid(lat, rng, sigma0, sigma0 + 3);
        auto U = random_zero_sum(rng, setup.electrodes.size(), 2.0);
        auto sys = assemble(lat, {sigma, U});
        auto rep = solve(sys);
        auto ec = energy_check(rep, U, sigma0);
        EXPECT_TRUE(ec.pass) << setup.name << " h=" << h << " lhs=" << ec.lhs << " rhs=" << ec.rhs;
      }
    }
  }
}

TEST(StateInterpolation, NodeAndCellValues) {
  std::mt19937_64 rng(4);
  auto lat = Lattice::build(DomainSpec::rect(1, 1), left_right(), 0.25);
  auto u = random_grid(lat, rng, -1, 1);
  for (std::size_t id = 0; id < lat->node_count(); ++id) {
    EXPECT_NEAR(interpolate_state(u, StateInterpolation::Multilinear, lat->point(static_cast<int>(id))),
                u[static_cast<int>(id)], 1e-15);
  }
  for (int id : lat->qplus()) {
    Point x = lat->point(id);
    x[0] += 0.1;
    x[1] += 0.2;
    EXPECT_EQ(interpolate_state(u, StateInterpolation::PiecewiseConstant, x), u[id]);
    EXPECT_EQ(interpolate_state(u, StateInterpolation::PiecewiseConstantDiff, x, 1), diff_at(u, id, 1));
  }
}

TEST(WeakIdentity, HoldsForRandomTestFunctions) {
  std::mt19937_64 rng(5);
  for (const auto& setup : all_setups()) {
    double h = setup.spec.dim() == 3 ? 0.125 : 1.0 / 16;
    auto lat = Lattice::build(setup.spec, setup.electrodes, h);
    auto sigma = random_grid(lat, rng, 1, 2);
    auto U = random_zero_sum(rng, setup.electrodes.size(), 1.0);
    auto rep = solve(assemble(lat, {sigma, U}), 1e-13);
    for (int k = 0; k < 20; ++k) {
      auto eta = random_grid(lat, rng, -1, 1);
      double lhs = bilinear_form(sigma, rep.u, eta);
      double rhs = linear_form(*lat, U, eta);
      EXPECT_LE(std::abs(lhs - rhs), 1e-9 * weak_identity_scale(sigma, rep.u, eta, U)) << setup.name;
    }
  }
}

TEST(TraceGap, BoundHoldsOnSolvedState) {
  for (const auto& setup : {all_setups()[0], all_setups()[1]}) {
    auto s = solve_setup(setup.spec, setup.electrodes, 1.0 / 16, nullptr,
                         setup.electrodes.size() == 4 ? std::vector<double>{1, 0.5, -1, -0.5}
                                                      : std::vector<double>{1, -1});
    auto gap = electrode_trace_gap(s.rep.u);
    EXPECT_GT(gap.total, 0.0);
    EXPECT_LE(gap.total, gap.bound) << setup.name;
  }
}

TEST(GradientBound, InterpolantGradientBoundedByEdgeSum) {
  std::mt19937_64 rng(6);
  for (const auto& setup : all_setups()) {
    double h = setup.spec.dim() == 3 ? 0.125 : 1.0 / 16;
    auto lat = Lattice::build(setup.spec, setup.electrodes, h);
    auto rep = solve(assemble(lat, {random_grid(lat, rng, 1, 2), random_zero_sum(rng, setup.electrodes.size(), 1.0)}));
    auto g = gradient_interpolant_bound(rep.u);
    EXPECT_LE(g.lhs, g.rhs_edges) << setup.name;
  }
}

TEST(GradientBound, UniformH1BoundAcrossRefinement) {
  auto setup = all_setups()[0];
  std::vector<double> norms;
  for (double h : {0.125, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    auto s = solve_setup(setup.spec, setup.electrodes, h, nullptr, {1, 0.5, -1, -0.5});
    norms.push_back(interpolant_h1_norm(s.rep.u));
  }
  for (double v : norms) EXPECT_LE(v, 1.25 * norms.front());
}

TEST(ConjugateGradient, ReachesTightTolerance) {
  for (const auto& setup : all_setups()) {
    double h = setup.spec.dim() == 3 ? 0.125 : 1.0 / 32;
    auto s = solve_setup(setup.spec, setup.electrodes, h, nullptr,
                         setup.electrodes.size() == 4 ? std::vector<double>{1, 0.5, -1, -0.5}
                                                      : std::vector<double>{1, -1});
    EXPECT_LE(s.rep.residual_norm, 1e-10 * s.rep.rhs_norm);
    EXPECT_GT(s.rep.iterations, 0);
  }
}

TEST(Assemble, RejectsMismatchedControl) {
  auto lat = Lattice::build(DomainSpec::rect(1, 1), left_right(), 0.25);
  EXPECT_THROW(assemble(lat, {GridFunction(lat, 1.0), {1.0}}), InvalidArgument);
}
