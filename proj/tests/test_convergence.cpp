#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cemfd/control_space.hpp"
#include "cemfd/convergence.hpp"
#include "cemfd/errors.hpp"
#include "support.hpp"

using namespace cemfd;
using namespace cemfd::testing;

namespace {

StudyConfig rect_study(const ConductivityField& sigma) {
  StudyConfig sc;
  sc.spec = DomainSpec::rect(1, 1);
  sc.electrodes = four_sides();
  sc.sigma = sigma;
  sc.U = {1, 0.5, -1, -0.5};
  sc.h_list = {1.0 / 4, 1.0 / 8, 1.0 / 16};
  sc.h_ref = 1.0 / 64;
  sc.params.R = 100;
  sc.checks = {StudyCheck::Energy,           StudyCheck::SteklovLemma,
               StudyCheck::PmapNorm,         StudyCheck::WeakIdentity,
               StudyCheck::StateConvergence, StudyCheck::FunctionalConvergence,
               StudyCheck::InterpEquivalence};
  return sc;
}

const Verdict& find_verdict(const ConvergenceReport& rep, const std::string& name) {
  for (const auto& v : rep.verdicts) {
    if (v.name == name) return v;
  }
  throw std::runtime_error("no verdict " + name);
}

std::vector<double> column(const Table& t, const std::string& name) {
  std::vector<double> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.number(r, name));
  return out;
}

}  // namespace

TEST(Study, ConstantPhantomPasses) {
  auto rep = run_study(rect_study(ConductivityField::constant(1.0)));
  ASSERT_EQ(rep.rows.rows.size(), 3u);
  EXPECT_TRUE(rep.all_passed());
  for (const char* name : {"state_L2_Q_decreasing", "state_L2_S_decreasing", "gap_i_decreasing",
                           "gap_ii_decreasing", "energy_estimate", "weak_identity"}) {
    EXPECT_EQ(find_verdict(rep, name).status, VerdictStatus::Pass) << name;
  }
  auto lhs = column(rep.rows, "energy_lhs");
  auto rhs = column(rep.rows, "energy_rhs");
  for (std::size_t i = 0; i < lhs.size(); ++i) EXPECT_LE(lhs[i], rhs[i]);
}

TEST(Study, BumpPhantomStateAndFunctionalDecrease) {
  Bump b;
  b.center = {0.6, 0.4, 0.0};
  b.radius = 0.2;
  b.amplitude = 1.0;
  auto sc = rect_study(ConductivityField::bumps(DomainSpec::rect(1, 1), 1.0, {b}));
  sc.checks = {StudyCheck::StateConvergence, StudyCheck::FunctionalConvergence};
  auto rep = run_study(sc);
  auto eq = column(rep.rows, "l2_err_Q");
  auto gi = column(rep.rows, "gap_i");
  for (std::size_t i = 1; i < eq.size(); ++i) {
    EXPECT_LT(eq[i], eq[i - 1]);
    EXPECT_LT(gi[i], gi[i - 1]);
  }
  EXPECT_GT(loglog_slope(sc.h_list, eq), 0.5);
}

TEST(Study, VerdictsRecomputableFromRows) {
  auto sc = rect_study(ConductivityField::constant(1.0));
  auto rep = run_study(sc);
  auto again = study_verdicts(rep.rows, sc.checks, 2);
  ASSERT_EQ(again.size(), rep.verdicts.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_EQ(again[i].name, rep.verdicts[i].name);
    EXPECT_EQ(again[i].status, rep.verdicts[i].status);
    EXPECT_EQ(again[i].detail, rep.verdicts[i].detail);
  }
}

TEST(Study, SingleLevelIsVacuous) {
  auto sc = rect_study(ConductivityField::constant(1.0));
  sc.h_list = {1.0 / 8};
  sc.checks = {StudyCheck::StateConvergence};
  auto rep = run_study(sc);
  EXPECT_EQ(find_verdict(rep, "state_L2_Q_decreasing").status, VerdictStatus::Vacuous);
  EXPECT_TRUE(rep.all_passed());
}

TEST(Study, RejectsBadLevels) {
  auto sc = rect_study(ConductivityField::constant(1.0));
  sc.h_ref = 1.0 / 16;
  EXPECT_THROW(sc.validate(), InvalidArgument);
  sc = rect_study(ConductivityField::constant(1.0));
  sc.h_list = {1.0 / 8, 1.0 / 4};
  EXPECT_THROW(sc.validate(), InvalidArgument);
  sc.h_list = {1.0 / 8};
  sc.h_ref = 0.0;
  EXPECT_DOUBLE_EQ(sc.effective_h_ref(), 1.0 / 32);
}

TEST(ReferenceState, ZeroVoltagesGiveZeroState) {
  auto ref = reference_state(DomainSpec::rect(1, 1), four_sides(), ConductivityField::constant(1.0),
                             {0, 0, 0, 0}, 1.0 / 16, 1e-12);
  for (double v : ref.u.values()) EXPECT_EQ(v, 0.0);
}

TEST(ReferenceState, SelfConsistentUnderRefinement) {
  const auto spec = DomainSpec::rect(1, 1);
  const auto el = four_sides();
  const std::vector<double> U{1, 0.5, -1, -0.5};
  const auto sigma = ConductivityField::constant(1.0);
  auto r32 = reference_state(spec, el, sigma, U, 1.0 / 32, 1e-12);
  auto r64 = reference_state(spec, el, sigma, U, 1.0 / 64, 1e-12);
  auto r8 = reference_state(spec, el, sigma, U, 1.0 / 8, 1e-12);
  const double fine_gap = l2_error(r32.u, r64, ErrorRegion::Q);
  const double coarse_gap = l2_error(r8.u, r64, ErrorRegion::Q);
  EXPECT_LT(fine_gap, coarse_gap);
}

TEST(ReferenceState, TransposeSymmetric) {
  // four_sides is ordered left, bottom, right, top; swapping x1 and x2 swaps
  // the first two and the last two electrodes.
  auto ref = reference_state(DomainSpec::rect(1, 1), four_sides(), ConductivityField::constant(1.0),
                             {1, 1, -1, -1}, 1.0 / 32, 1e-13);
  for (double x : {0.1, 0.33, 0.5, 0.77}) {
    for (double y : {0.05, 0.25, 0.6}) EXPECT_NEAR(ref({x, y, 0}), ref({y, x, 0}), 1e-9);
  }
}

TEST(L2Error, IdenticalAndConstant) {
  const auto spec = DomainSpec::rect(1, 1);
  auto ref = reference_state(spec, four_sides(), ConductivityField::constant(1.0),
                             {0, 0, 0, 0}, 1.0 / 16, 1e-12);
  EXPECT_EQ(l2_error(ref.u, ref, ErrorRegion::Q), 0.0);
  auto coarse = Lattice::build(spec, four_sides(), 0.25);
  GridFunction c(coarse, 0.3);
  EXPECT_NEAR(l2_error(c, ref, ErrorRegion::Q), 0.3, 1e-13);
  // Perimeter 4.
  EXPECT_NEAR(l2_error(c, ref, ErrorRegion::S), 0.6, 1e-13);
}

TEST(L2Error, MatchesOversampledMidpointRule) {
  const auto spec = DomainSpec::rect(1, 1);
  std::mt19937_64 rng(5);
  auto ref = reference_state(spec, four_sides(), ConductivityField::constant(1.0),
                             {0, 0, 0, 0}, 1.0 / 16, 1e-12);
  ref.u = random_grid(ref.lattice, rng, -1, 1);
  auto coarse = Lattice::build(spec, four_sides(), 0.25);
  auto uh = random_grid(coarse, rng, -1, 1);
  auto midpoint = [&](int k) {
    const double s = 1.0 / k;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        Point x{(i + 0.5) * s, (j + 0.5) * s, 0};
        double d = multilinear_interpolate(uh, x) - multilinear_interpolate(ref.u, x);
        sum += s * s * d * d;
      }
    }
    return sum;
  };
  // Grid lines of both lattices are sub-cell edges, so one Richardson step
  // removes the s² term of the piecewise-polynomial midpoint error.
  const double sum = (4.0 * midpoint(320) - midpoint(160)) / 3.0;
  EXPECT_NEAR(l2_error(uh, ref, ErrorRegion::Q), std::sqrt(sum), 1e-6 * std::sqrt(sum));
}

TEST(LoglogSlope, RecoversPowerLaw) {
  std::vector<double> h{0.5, 0.25, 0.125};
  std::vector<double> v{3 * 0.25, 3 * 0.0625, 3 * 0.015625};
  EXPECT_NEAR(loglog_slope(h, v), 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope({0.5}, {1.0})));
  EXPECT_TRUE(std::isnan(loglog_slope(h, {0.0, 0.0, 1.0})));
}

TEST(StudyCheckNames, RoundTrip) {
  for (auto c : {StudyCheck::Energy, StudyCheck::SteklovLemma, StudyCheck::PmapNorm,
                 StudyCheck::WeakIdentity, StudyCheck::StateConvergence,
                 StudyCheck::FunctionalConvergence, StudyCheck::InterpEquivalence}) {
    EXPECT_EQ(parse_study_check(study_check_name(c)), c);
  }
  EXPECT_THROW(parse_study_check("bogus"), InvalidArgument);
}
