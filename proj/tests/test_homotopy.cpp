#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "isobench/homotopy.hpp"
#include "test_support.hpp"

namespace isobench {
namespace {

using testing::desk_instance;
using testing::make_instance;
using testing::share;

double residual_at(const Problem& prob, const Vector& x, double lam) {
  Problem at = prob;
  at.lambda = lam;
  CostCounter c;
  return fixed_point_residual(at, x, c);
}

bool has_leave(const HomotopyPath& path) {
  for (const auto& bp : path.breakpoints)
    for (const auto& e : bp.events)
      if (e.type == PathEventType::Leave) return true;
  return false;
}

TEST(Homotopy, IdentityTwoBreakpoints) {
  const Problem prob = Problem::penalized(share(Matrix::Identity(2, 2)), Vector{{3.0, 1.0}}, 0.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(0.25));
  ASSERT_EQ(path.breakpoints.size(), 2u);
  EXPECT_DOUBLE_EQ(path.breakpoints[0].lambda, 3.0);
  EXPECT_DOUBLE_EQ(path.breakpoints[1].lambda, 1.0);
  ASSERT_EQ(path.breakpoints[0].events.size(), 1u);
  EXPECT_EQ(path.breakpoints[0].events[0].index, 0);
  EXPECT_EQ(path.breakpoints[1].events[0].index, 1);
  EXPECT_EQ(path.breakpoints[1].events[0].type, PathEventType::Join);
  for (double lam : {3.0, 2.5, 1.0, 0.6, 0.25}) {
    const Vector x = eval_path(path, lam);
    const Vector expected = soft_threshold(Vector{{3.0, 1.0}}, lam);
    EXPECT_LE((x - expected).cwiseAbs().maxCoeff(), 1e-14) << lam;
  }
}

TEST(Homotopy, ScalarClosedFormAndGrid) {
  const double kv = 0.7, yv = -2.0;
  Matrix k(1, 1);
  k(0, 0) = kv;
  const Problem prob = Problem::penalized(share(k), Vector{{yv}}, 0.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(0.05));
  ASSERT_EQ(path.breakpoints.size(), 1u);
  EXPECT_DOUBLE_EQ(path.breakpoints[0].lambda, std::abs(kv * yv));
  for (double lam : {1.2, 0.9, 0.4, 0.05}) {
    const double closed = soft_threshold(kv * yv, lam) / (kv * kv);
    EXPECT_NEAR(eval_path(path, lam)[0], closed, 1e-14);
    // Dense grid minimization of (k x - y)^2 + 2 lam |x|.
    double best = 1e300, arg = 0.0;
    for (int i = -400000; i <= 400000; ++i) {
      const double x = i * 1e-5;
      const double f = (kv * x - yv) * (kv * x - yv) + 2 * lam * std::abs(x);
      if (f < best) best = f, arg = x;
    }
    EXPECT_NEAR(closed, arg, 1e-5);
  }
}

TEST(Homotopy, DeskBreakpointResiduals) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(4.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  EXPECT_EQ(path.status, PathStatus::Complete);
  for (const auto& bp : path.breakpoints) EXPECT_LE(residual_at(prob, bp.x, bp.lambda), 1e-10) << bp.lambda;
  EXPECT_LE(residual_at(prob, path.x_stop, path.lambda_stop), 1e-10);
}

TEST(Homotopy, PathStructure) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(10.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  ASSERT_FALSE(path.breakpoints.empty());
  EXPECT_DOUBLE_EQ(path.breakpoints[0].lambda, inst.lam_max);
  EXPECT_EQ(path.breakpoints[0].x, Vector::Zero(200));
  for (std::size_t j = 1; j < path.breakpoints.size(); ++j) EXPECT_LT(path.breakpoints[j].lambda, path.breakpoints[j - 1].lambda);
}

TEST(Homotopy, KktAtBreakpoints) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(10.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  const Matrix& k = inst.op->entries();
  for (const auto& bp : path.breakpoints) {
    const Vector c = k.transpose() * (inst.y - k * bp.x);
    std::vector<char> on(200, 0);
    ASSERT_EQ(bp.support.size(), bp.signs.size());
    for (std::size_t a = 0; a < bp.support.size(); ++a) {
      const auto i = bp.support[a];
      on[static_cast<std::size_t>(i)] = 1;
      EXPECT_NEAR(c[i], bp.lambda * bp.signs[a], 1e-8 * inst.lam_max);
    }
    for (Eigen::Index i = 0; i < 200; ++i) {
      if (!on[static_cast<std::size_t>(i)]) {
        EXPECT_LE(std::abs(c[i]), bp.lambda * (1 + 1e-8));
      }
    }
  }
}

TEST(Homotopy, SegmentsAreAffine) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(8.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  for (std::size_t j = 0; j + 1 < path.breakpoints.size(); ++j) {
    const double mid = 0.5 * (path.breakpoints[j].lambda + path.breakpoints[j + 1].lambda);
    EXPECT_LE(residual_at(prob, eval_path(path, mid), mid), 1e-8);
  }
}

TEST(Homotopy, L1NormMonotone) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(12.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double lam = inst.lam_max * std::exp2(-12.0 * i / 400.0);
    const double l1 = path_l1_norm(path, std::max(lam, path.lambda_stop));
    EXPECT_GE(l1, prev - 1e-12 * std::max(1.0, prev));
    prev = l1;
  }
}

TEST(Homotopy, Deterministic) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(9.0);
  const HomotopyPath a = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  const HomotopyPath b = homotopy_solve(prob, PathStop::at_lambda(prob.lambda));
  ASSERT_EQ(a.breakpoints.size(), b.breakpoints.size());
  for (std::size_t j = 0; j < a.breakpoints.size(); ++j) {
    EXPECT_EQ(a.breakpoints[j].lambda, b.breakpoints[j].lambda);
    EXPECT_EQ(a.breakpoints[j].x, b.breakpoints[j].x);
  }
  EXPECT_EQ(a.x_stop, b.x_stop);
}

TEST(Homotopy, RhoStop) {
  const auto& inst = desk_instance();
  const Problem prob = inst.penalized(0.0);
  const double lam = inst.lambda_at(5.0);
  const HomotopyPath full = homotopy_solve(prob, PathStop::at_lambda(lam));
  const double rho = full.x_stop.lpNorm<1>();
  const HomotopyPath by_rho = homotopy_solve(prob, PathStop::at_rho(rho));
  EXPECT_NEAR(by_rho.x_stop.lpNorm<1>(), rho, 1e-10 * rho);
  EXPECT_NEAR(by_rho.lambda_stop, lam, 1e-9 * inst.lam_max);
  EXPECT_NEAR(path_lambda_for_rho(full, rho, 1e-10 * inst.lam_max), lam, 1e-8 * inst.lam_max);
  EXPECT_THROW(path_lambda_for_rho(full, 10 * rho, 1e-10), std::out_of_range);
}

TEST(Homotopy, StopAtLambdaMaxGivesZero) {
  const auto& inst = desk_instance();
  const HomotopyPath path = homotopy_solve(inst.penalized(0.0), PathStop::at_lambda(inst.lam_max));
  EXPECT_EQ(path.x_stop, Vector::Zero(200));
  EXPECT_THROW(homotopy_solve(inst.penalized(0.0), PathStop::at_lambda(2 * inst.lam_max)), std::invalid_argument);
}

TEST(Homotopy, TruncationIsFlagged) {
  const auto& inst = desk_instance();
  PathLimits limits;
  limits.max_breakpoints = 3;
  const HomotopyPath path = homotopy_solve(inst.penalized(0.0), PathStop::at_lambda(inst.lambda_at(10)), limits);
  EXPECT_EQ(path.status, PathStatus::Truncated);
  EXPECT_EQ(path.truncation_reason, "max_breakpoints");
  EXPECT_EQ(path.breakpoints.size(), 3u);
  EXPECT_GT(path.lambda_stop, inst.lambda_at(10));
  EXPECT_FALSE(path.covers(inst.lambda_at(10)));

  PathLimits support;
  support.max_support = 5;
  const HomotopyPath small = homotopy_solve(inst.penalized(0.0), PathStop::at_lambda(inst.lambda_at(10)), support);
  EXPECT_EQ(small.truncation_reason, "max_support");
}

TEST(Homotopy, DuplicateColumnsAreDegenerate) {
  // Three columns where the third is the mean of the first two: past the
  // point where all three are equicorrelated the minimizer is not unique.
  std::mt19937_64 gen(7);
  int degenerate = 0;
  for (int t = 0; t < 40; ++t) {
    Matrix a = testing::random_matrix(gen, 2, 3);
    a.col(2) = 0.5 * (a.col(0) + a.col(1));
    const Vector y = testing::random_vector(gen, 2);
    const Problem prob = Problem::penalized(share(a), y, 0.0);
    try {
      const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(0.0));
      for (const auto& bp : path.breakpoints) EXPECT_LE(residual_at(prob, bp.x, bp.lambda), 1e-8);
    } catch (const DegenerateSupport& e) {
      ++degenerate;
      EXPECT_EQ(e.partial().status, PathStatus::Degenerate);
      EXPECT_FALSE(e.partial().breakpoints.empty());
      for (const auto& bp : e.partial().breakpoints) EXPECT_LE(residual_at(prob, bp.x, bp.lambda), 1e-8);
    }
  }
  EXPECT_GT(degenerate, 0);
}

TEST(EvalPath, EndpointsAndRange) {
  const auto& inst = desk_instance();
  const HomotopyPath path = homotopy_solve(inst.penalized(0.0), PathStop::at_lambda(inst.lambda_at(6)));
  EXPECT_EQ(eval_path(path, inst.lam_max), Vector::Zero(200));
  for (const auto& bp : path.breakpoints) EXPECT_EQ(eval_path(path, bp.lambda), bp.x);
  EXPECT_THROW(eval_path(path, 1.01 * inst.lam_max), std::out_of_range);
  EXPECT_THROW(eval_path(path, 0.5 * path.lambda_stop), std::out_of_range);
}

TEST(ComplexityTable, IdentityCountsDistinctMagnitudes) {
  const Vector y{{3.0, -1.0, 3.0, 0.5, 2.0, -0.1}};
  const Problem prob = Problem::penalized(share(Matrix::Identity(6, 6)), y, 0.0);
  const auto rows = complexity_table(prob, PathStop::at_lambda(0.3));
  ASSERT_FALSE(rows.empty());
  // Distinct |y_i| above 0.3: {3, 2, 1, 0.5}.
  EXPECT_EQ(rows.back().breakpoint_count, 4u);
  EXPECT_EQ(rows.back().support_size, 5u);
}

TEST(ComplexityTable, LeaveEventsAddBreakpoints) {
  bool found = false;
  for (std::uint64_t seed = 1; seed <= 60 && !found; ++seed) {
    const auto inst = make_instance(OperatorKind::Gaussian, 20, 40, seed, 4, 0.05, seed + 100);
    const Problem prob = inst.penalized(0.0);
    const PathStop stop = PathStop::at_lambda(inst.lambda_at(12));
    const HomotopyPath path = homotopy_solve(prob, stop);
    if (!has_leave(path)) continue;
    found = true;
    const auto rows = complexity_table(path);
    EXPECT_GT(rows.back().breakpoint_count, rows.back().support_size) << "seed " << seed;
  }
  EXPECT_TRUE(found);
}

TEST(ComplexityTable, CumulativeAndCountsCoverSupport) {
  const auto& inst = desk_instance();
  const auto rows = complexity_table(inst.penalized(0.0), PathStop::at_lambda(inst.lambda_at(12)));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].flops, rows[i - 1].flops);
    EXPECT_GE(rows[i].cost_units, rows[i - 1].cost_units);
    EXPECT_GT(rows[i].breakpoint_count, rows[i - 1].breakpoint_count);
  }
  EXPECT_GE(rows.back().breakpoint_count, rows.back().support_size);
}

TEST(ComplexitySlope, ExactPowerLaw) {
  std::vector<ComplexityRow> rows;
  for (std::size_t s = 10; s <= 100; s += 10) {
    ComplexityRow r;
    r.support_size = s;
    r.flops = 7.0 * std::pow(static_cast<double>(s), 3.0);
    rows.push_back(r);
  }
  EXPECT_NEAR(complexity_slope(rows, 10, 100), 3.0, 1e-12);
  EXPECT_TRUE(std::isnan(complexity_slope(rows, 200, 300)));
}

TEST(PathCsv, HeaderAndRows) {
  const Problem prob = Problem::penalized(share(Matrix::Identity(2, 2)), Vector{{3.0, 1.0}}, 0.0);
  const HomotopyPath path = homotopy_solve(prob, PathStop::at_lambda(0.5));
  std::ostringstream out;
  write_path_csv(path, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "j,lambda_j,l1_norm,support_size,event_type,event_index");
  std::getline(in, line);
  EXPECT_EQ(line, "0,3,0,1,join,0");
  std::getline(in, line);
  EXPECT_EQ(line, "1,1,2,2,join,1");
}

}  // namespace
}  // namespace isobench
