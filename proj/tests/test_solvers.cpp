#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "isobench/homotopy.hpp"
#include "isobench/solvers.hpp"
#include "test_support.hpp"

namespace isobench {
namespace {

using testing::desk_instance;
using testing::rel_error;
using testing::share;

Vector oracle(const Problem& prob) { return homotopy_solve(prob, PathStop::at_lambda(prob.lambda)).x_stop; }

Problem constrained_at(const testing::Instance& inst, double k) {
  const Problem pen = inst.penalized(k);
  return inst.constrained(oracle(pen).lpNorm<1>(), k);
}

Problem problem_for(Algorithm a, const testing::Instance& inst, double k) {
  return is_constrained(a) ? constrained_at(inst, k) : inst.penalized(k);
}

double functional(const Problem& prob, const Vector& x) {
  CostCounter c;
  return functional_value(prob, x, c);
}

TEST(Algorithms, NamesRoundTrip) {
  for (auto a : all_algorithms()) EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_EQ(all_algorithms().size(), 6u);
  EXPECT_THROW(parse_algorithm("nope"), std::invalid_argument);
  EXPECT_TRUE(is_constrained(Algorithm::Psd));
  EXPECT_FALSE(is_constrained(Algorithm::Fista));
}

TEST(Factory, ModeChecked) {
  const auto& inst = desk_instance();
  EXPECT_THROW(make_solver(Algorithm::Psd, inst.penalized(2)), std::invalid_argument);
  EXPECT_THROW(make_solver(Algorithm::Ist, inst.constrained(1.0, 2)), std::invalid_argument);
}

TEST(Ist, FirstStepIsThresholdedCorrelation) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(3);
  IstSolver ist(prob);
  ist.step();
  CostCounter c;
  const Vector expected = soft_threshold(apply(*inst.op, inst.y, Apply::Adjoint, c), prob.lambda);
  EXPECT_LE((ist.x() - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(ist.cost(), 2u);
  EXPECT_EQ(ist.iterations(), 1u);
}

TEST(Ist, MinimizerIsFixedPoint) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(5);
  const Vector xbar = oracle(prob);
  CostCounter c;
  const Vector grad = apply(*inst.op, inst.y - apply(*inst.op, xbar, Apply::Forward, c), Apply::Adjoint, c);
  EXPECT_LE((soft_threshold(xbar + grad, prob.lambda) - xbar).norm(), 1e-12 * std::max(1.0, xbar.norm()));
}

TEST(Ist, FunctionalNonIncreasing) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(6);
  IstSolver ist(prob);
  const double f0 = functional(prob, ist.x());
  double prev = f0;
  for (int n = 0; n < 200; ++n) {
    ist.step();
    const double f = functional(prob, ist.x());
    EXPECT_LE(f, prev + 1e-12 * f0) << n;
    prev = f;
  }
}

TEST(IstWide, SameMinimizerAsIst) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(4);
  const Vector xbar = oracle(prob);
  IstSolver wide(prob, true);
  EXPECT_EQ(wide.algorithm(), Algorithm::IstWide);
  for (int n = 0; n < 5000; ++n) wide.step();
  EXPECT_LE(rel_error(wide.x(), xbar), 1e-8);
}

// Plain IST on the rescaled operator K' = sK with data y' = s y and penalty
// s^2 lam has the same minimizer; one of its steps matches one widened step.
TEST(IstWide, EquivalentToRescaledOperator) {
  const auto& inst = desk_instance();
  const double s = std::sqrt(2.0);
  const Problem prob = inst.penalized(3);
  const Problem scaled = Problem::penalized(share(Matrix(s * inst.op->entries())), s * inst.y, 2.0 * prob.lambda);
  IstSolver wide(prob, true), plain(scaled);
  for (int n = 0; n < 20; ++n) {
    wide.step();
    plain.step();
  }
  EXPECT_LE((wide.x() - plain.x()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Psd, IdentityFirstStepLandsOnData) {
  const Vector y{{0.5, -1.0, 2.0}};
  const Problem prob = Problem::constrained(share(Matrix::Identity(3, 3)), y, 4.0);
  PsdSolver psd(prob);
  psd.step();
  EXPECT_NEAR(psd.last_beta(), 1.0, 1e-15);
  EXPECT_LE((psd.x() - y).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(psd.cost(), 3u);
}

TEST(Psd, IteratesFeasible) {
  const auto& inst = desk_instance();
  const Problem prob = constrained_at(inst, 6);
  PsdSolver psd(prob);
  for (int n = 0; n < 500; ++n) {
    psd.step();
    EXPECT_LE(psd.x().lpNorm<1>(), prob.rho * (1 + 1e-10));
  }
}

TEST(Psd, ConvergesToConstrainedMinimizer) {
  const auto& inst = desk_instance();
  const Problem pen = inst.penalized(4);
  const Vector xbar = oracle(pen);
  PsdSolver psd(inst.constrained(xbar.lpNorm<1>(), 4));
  while (psd.cost() < 100000 && rel_error(psd.x(), xbar) > 1e-6) psd.step();
  EXPECT_LE(rel_error(psd.x(), xbar), 1e-6);
}

TEST(Psd, ZeroGradientConverges) {
  const Problem prob = Problem::constrained(share(Matrix::Identity(2, 2)), Vector::Zero(2), 1.0);
  PsdSolver psd(prob);
  psd.step();
  EXPECT_TRUE(psd.converged());
  EXPECT_EQ(psd.x(), Vector::Zero(2));
}

TEST(Gpsr, ZeroIsFixedPointAboveLambdaMax) {
  const auto& inst = desk_instance();
  Problem prob = inst.penalized(0);
  prob.lambda *= 1.01;
  GpsrSolver gpsr(prob);
  for (int n = 0; n < 10; ++n) gpsr.step();
  EXPECT_EQ(gpsr.x(), Vector::Zero(200));
}

TEST(Gpsr, SplitStaysNonNegative) {
  const auto& inst = desk_instance();
  GpsrSolver gpsr(inst.penalized(7));
  for (int n = 0; n < 1000; ++n) {
    gpsr.step();
    ASSERT_GE(gpsr.u().minCoeff(), 0.0);
    ASSERT_GE(gpsr.v().minCoeff(), 0.0);
  }
}

TEST(Gpsr, ObjectiveIdentity) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(5);
  GpsrSolver gpsr(prob);
  for (int n = 0; n < 50; ++n) {
    gpsr.step();
    const double overlap = gpsr.u().cwiseMin(gpsr.v()).sum();
    const double f = functional(prob, gpsr.x());
    EXPECT_NEAR(gpsr.objective(), f + 4.0 * prob.lambda * overlap, 1e-12 * std::max(1.0, f));
    if (overlap == 0.0) {
      EXPECT_NEAR(gpsr.objective(), f, 1e-12 * std::max(1.0, f));
    }
  }
}

TEST(Gpsr, CostIsTwoPerGradientPlusTrials) {
  const auto& inst = desk_instance();
  GpsrSolver gpsr(inst.penalized(4));
  std::uint64_t prev = 0;
  for (int n = 0; n < 30; ++n) {
    gpsr.step();
    EXPECT_GE(gpsr.cost() - prev, 2u);
    prev = gpsr.cost();
  }
}

TEST(L1ls, ZeroMinimizerAboveLambdaMax) {
  const auto& inst = desk_instance();
  Problem prob = inst.penalized(0);
  prob.lambda *= 1.05;
  L1lsSolver l1ls(prob);
  for (int n = 0; n < 50; ++n) l1ls.step();
  EXPECT_LE(l1ls.x().cwiseAbs().maxCoeff(), 1e-6);
}

TEST(L1ls, DualityGapDecreases) {
  const auto& inst = desk_instance();
  L1lsSolver l1ls(inst.penalized(6));
  l1ls.step();
  double prev = l1ls.duality_gap();
  for (int n = 0; n < 40 && !l1ls.converged(); ++n) {
    l1ls.step();
    EXPECT_LE(l1ls.duality_gap(), prev) << n;
    prev = l1ls.duality_gap();
  }
}

TEST(L1ls, StaysInterior) {
  const auto& inst = desk_instance();
  L1lsSolver l1ls(inst.penalized(8));
  for (int n = 0; n < 60; ++n) {
    l1ls.step();
    EXPECT_TRUE(((l1ls.u() - l1ls.x().cwiseAbs()).array() > 0.0).all()) << n;
  }
}

TEST(L1ls, BeatsIstAtSmallPenalty) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(10);
  const Vector xbar = oracle(prob);
  auto units_to = [&](Solver& s) {
    while (rel_error(s.x(), xbar) > 1e-4 && s.cost() < 2000000) s.step();
    return s.cost();
  };
  L1lsSolver l1ls(prob);
  IstSolver ist(prob);
  const auto c_l1ls = units_to(l1ls);
  const auto c_ist = units_to(ist);
  EXPECT_LE(rel_error(l1ls.x(), xbar), 1e-4);
  EXPECT_LT(c_l1ls, c_ist);
}

TEST(Fista, TSequence) {
  const auto& inst = desk_instance();
  FistaSolver f(inst.penalized(3));
  EXPECT_EQ(f.t(), 1.0);
  f.step();
  EXPECT_NEAR(f.t(), (1 + std::sqrt(5.0)) / 2, 1e-15);
  f.step();
  EXPECT_NEAR(f.t(), 2.193527085331054, 1e-15);
  double prev = f.t();
  for (int n = 0; n < 50; ++n) {
    f.step();
    EXPECT_GT(f.t(), prev);
    prev = f.t();
  }
}

TEST(Fista, FirstIterateEqualsIst) {
  const auto& inst = desk_instance();
  FistaSolver f(inst.penalized(5));
  IstSolver i(inst.penalized(5));
  f.step();
  i.step();
  EXPECT_EQ(f.x(), i.x());
  EXPECT_EQ(f.cost(), 2u);
}

TEST(Fista, BeatsIstAtEqualCost) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(8);
  const Vector xbar = oracle(prob);
  const Trace tf = run_budgeted(*make_solver(Algorithm::Fista, prob), {10000}, xbar);
  const Trace ti = run_budgeted(*make_solver(Algorithm::Ist, prob), {10000}, xbar);
  EXPECT_LE(tf.snapshots[0].e, ti.snapshots[0].e);
}

TEST(AllSolvers, CostStrictlyIncreasesAndIterateFinite) {
  const auto& inst = desk_instance();
  for (auto a : all_algorithms()) {
    auto s = make_solver(a, problem_for(a, inst, 4));
    std::uint64_t prev = s->cost();
    for (int n = 0; n < 30; ++n) {
      s->step();
      EXPECT_GT(s->cost(), prev) << to_string(a);
      EXPECT_TRUE(s->x().allFinite()) << to_string(a);
      prev = s->cost();
    }
  }
}

// Every operator application made during a step must show up on the solver's
// clock: the per-thread apply() counter moves in lockstep with cost().
TEST(AllSolvers, CostInstrumentation) {
  const auto& inst = desk_instance();
  for (auto a : all_algorithms()) {
    auto s = make_solver(a, problem_for(a, inst, 6));
    for (int n = 0; n < 40; ++n) {
      const auto calls0 = apply_call_count();
      const auto cost0 = s->cost();
      s->step();
      ASSERT_EQ(apply_call_count() - calls0, s->cost() - cost0) << to_string(a) << " step " << n;
    }
  }
  const auto calls0 = apply_call_count();
  CostCounter c;
  (void)lambda_max(*inst.op, inst.y, c);
  (void)fixed_point_residual(inst.penalized(2), Vector::Zero(200), c);
  (void)functional_value(inst.penalized(2), Vector::Zero(200), c);
  (void)lambda_of_rho(inst.penalized(2), Vector::Zero(200), c);
  EXPECT_EQ(c.units(), 1u + 2u + 1u + 2u);
  EXPECT_EQ(apply_call_count() - calls0, c.units());
}

TEST(AllSolvers, ConvergeAtModeratePenalty) {
  const auto& inst = desk_instance();
  const Vector xbar = oracle(inst.penalized(4));
  for (auto a : all_algorithms()) {
    auto s = make_solver(a, problem_for(a, inst, 4));
    while (s->cost() < 1000000 && rel_error(s->x(), xbar) > 1e-6) s->step();
    EXPECT_LE(rel_error(s->x(), xbar), 1e-6) << to_string(a);
  }
}

TEST(RunBudgeted, ZeroBudgetIsInitialState) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(4);
  const Vector xbar = oracle(prob);
  for (auto a : all_algorithms()) {
    auto s = make_solver(a, problem_for(a, inst, 4));
    const auto start = s->cost();
    const Trace t = run_budgeted(*s, {0}, xbar);
    ASSERT_EQ(t.snapshots.size(), 1u);
    EXPECT_EQ(t.snapshots[0].e, 1.0) << to_string(a);
    EXPECT_EQ(t.snapshots[0].n, 0u);
    EXPECT_EQ(t.snapshots[0].cost, start);
  }
}

TEST(RunBudgeted, SnapshotCostsRespectBudgets) {
  const auto& inst = desk_instance();
  const std::vector<std::uint64_t> budgets{5, 17, 60, 200, 1000};
  for (auto a : all_algorithms()) {
    auto s = make_solver(a, problem_for(a, inst, 6));
    const Trace t = run_budgeted(*s, budgets, std::nullopt);
    ASSERT_EQ(t.snapshots.size(), budgets.size());
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      EXPECT_GE(t.snapshots[b].cost, budgets[b]) << to_string(a);
      if (b > 0) {
        EXPECT_GE(t.snapshots[b].cost, t.snapshots[b - 1].cost);
      }
      EXPECT_TRUE(std::isnan(t.snapshots[b].e));
    }
  }
}

TEST(RunBudgeted, OvershootBelowOneStep) {
  const auto& inst = desk_instance();
  for (auto a : {Algorithm::Ist, Algorithm::Psd, Algorithm::Fista}) {
    auto s = make_solver(a, problem_for(a, inst, 6));
    const std::uint64_t per_step = a == Algorithm::Psd ? 3 : 2;
    const std::vector<std::uint64_t> budgets{1, 7, 100, 1001};
    const Trace t = run_budgeted(*s, budgets, std::nullopt);
    for (std::size_t b = 0; b < budgets.size(); ++b) EXPECT_LT(t.snapshots[b].cost, budgets[b] + per_step);
  }
}

TEST(RunBudgeted, IstFunctionalNonIncreasing) {
  const auto& inst = desk_instance();
  std::vector<std::uint64_t> budgets;
  for (std::uint64_t b = 0; b <= 2000; b += 20) budgets.push_back(b);
  const Trace t = run_budgeted(*make_solver(Algorithm::Ist, inst.penalized(5)), budgets, std::nullopt);
  for (std::size_t i = 1; i < t.snapshots.size(); ++i) EXPECT_LE(t.snapshots[i].F, t.snapshots[i - 1].F + 1e-12 * t.snapshots[0].F);
}

TEST(RunBudgeted, RejectsNonIncreasingBudgets) {
  const auto& inst = desk_instance();
  auto s = make_solver(Algorithm::Ist, inst.penalized(2));
  EXPECT_THROW(run_budgeted(*s, {10, 10}, std::nullopt), std::invalid_argument);
}

TEST(RunBudgeted, ZeroReferenceUsesAbsoluteError) {
  const auto& inst = desk_instance();
  const Trace t = run_budgeted(*make_solver(Algorithm::Ist, inst.penalized(0)), {0, 10}, Vector::Zero(200));
  EXPECT_TRUE(t.snapshots[1].absolute_error);
  EXPECT_EQ(t.snapshots[1].e, 0.0);
}

TEST(RunBudgeted, Deterministic) {
  const auto& inst = desk_instance();
  const Vector xbar = oracle(inst.penalized(7));
  for (auto a : all_algorithms()) {
    const Trace t1 = run_budgeted(*make_solver(a, problem_for(a, inst, 7)), {10, 100, 1000}, xbar);
    const Trace t2 = run_budgeted(*make_solver(a, problem_for(a, inst, 7)), {10, 100, 1000}, xbar);
    for (std::size_t b = 0; b < 3; ++b) {
      EXPECT_EQ(t1.snapshots[b].e, t2.snapshots[b].e);
      EXPECT_EQ(t1.snapshots[b].cost, t2.snapshots[b].cost);
    }
  }
}

TEST(TraceCsv, Columns) {
  const auto& inst = desk_instance();
  const Trace t = run_budgeted(*make_solver(Algorithm::Ist, inst.penalized(2)), {0, 4}, std::nullopt);
  std::ostringstream out;
  write_trace_csv(t, 2.0, out, true, false);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "algo,lambda_over_lambda_max_log2,cost,n,e,F,fp_residual,wall_seconds");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("ist,2,0,0,nan,", 0), 0u) << line;
  EXPECT_EQ(line.substr(line.size() - 2), ",0");
}

}  // namespace
}  // namespace isobench
