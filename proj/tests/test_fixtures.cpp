#include <gtest/gtest.h>

#include <cmath>

#include "isobench/fixtures.hpp"
#include "test_support.hpp"

namespace isobench {
namespace {

OperatorRecipe recipe(OperatorKind kind, Eigen::Index m = 40, Eigen::Index p = 120, std::uint64_t seed = 5) {
  OperatorRecipe r;
  r.kind = kind;
  r.m = m;
  r.p = p;
  r.seed = seed;
  return r;
}

double max_rel_diff(const Vector& a, const Vector& b) {
  return ((a - b).array().abs() / b.array().abs()).maxCoeff();
}

TEST(OperatorKindNames, RoundTrip) {
  for (auto kind : {OperatorKind::Gaussian, OperatorKind::Duplicated, OperatorKind::Swapped}) {
    EXPECT_EQ(parse_operator_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_operator_kind("hadamard"), std::invalid_argument);
}

TEST(DuplicateColumn, RelativePosition) {
  EXPECT_EQ(default_duplicate_column(8192), 3999);
  EXPECT_EQ(default_duplicate_column(1000), 488);
}

TEST(BuildOperator, DeterministicPerRecipe) {
  for (auto kind : {OperatorKind::Gaussian, OperatorKind::Duplicated, OperatorKind::Swapped}) {
    EXPECT_EQ(build_operator(recipe(kind)).entries(), build_operator(recipe(kind)).entries());
    EXPECT_NE(build_operator(recipe(kind)).entries(), build_operator(recipe(kind, 40, 120, 6)).entries());
  }
}

TEST(BuildOperator, GaussianNormalized) {
  const Operator k = build_operator(recipe(OperatorKind::Gaussian));
  EXPECT_NEAR(compute_singular_values(k.entries())[0], kUnitNormTarget, 1e-12);
  OperatorRecipe raw = recipe(OperatorKind::Gaussian);
  raw.normalize = 0.0;
  EXPECT_EQ(build_operator(raw).entries(), gen_gaussian(40, 120, 5).entries());
}

TEST(BuildOperator, DuplicatedKeepsGaussianSpectrum) {
  const Vector g = compute_singular_values(build_operator(recipe(OperatorKind::Gaussian)).entries());
  const Operator d = build_operator(recipe(OperatorKind::Duplicated));
  EXPECT_LE(max_rel_diff(compute_singular_values(d.entries()), g), 1e-8);
  // Columns past j0 are nearly parallel.
  const Eigen::Index j0 = default_duplicate_column(120);
  const auto a = d.entries().col(j0), b = d.entries().col(119);
  EXPECT_GT(std::abs(a.dot(b)) / (a.norm() * b.norm()), 0.99);
  EXPECT_LT(std::abs(d.entries().col(0).dot(a)) / (d.entries().col(0).norm() * a.norm()), 0.9);
}

TEST(BuildOperator, SwappedCarriesSurrogateSpectrum) {
  const Operator s = build_operator(recipe(OperatorKind::Swapped));
  SpectrumSpec spec;
  spec.kind = SpectrumKind::SurrogateIllCond;
  spec.n = 40;
  spec.decades = 8.0;
  spec.top = kUnitNormTarget;
  const Vector want = surrogate_spectrum(spec);
  EXPECT_LE(max_rel_diff(compute_singular_values(s.entries()), want), 1e-8);
  EXPECT_NEAR(want[39] / want[0], 1e-8, 1e-20);
}

TEST(BuildOperator, SwappedKeepsSingularVectors) {
  const Operator g = gen_gaussian(30, 60, 9);
  OperatorRecipe r = recipe(OperatorKind::Swapped, 30, 60, 9);
  const Operator s = build_operator(r);
  Eigen::BDCSVD<Matrix> sg(g.entries(), Eigen::ComputeThinU);
  Eigen::BDCSVD<Matrix> ss(s.entries(), Eigen::ComputeThinU);
  // Leading left singular vectors agree up to sign.
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::abs(sg.matrixU().col(i).dot(ss.matrixU().col(i))), 1.0, 1e-8);
}

TEST(SparseData, SupportAndNoiseless) {
  const Operator k = gen_gaussian(20, 50, 2);
  const SparseData d = gen_sparse_data(k, 7, 0.0, 11);
  EXPECT_EQ((d.x_input.array() != 0.0).count(), 7);
  EXPECT_EQ(d.y, k.entries() * d.x_input);
  EXPECT_EQ(gen_sparse_data(k, 0, 0.0, 11).y, Vector::Zero(20));
}

TEST(SparseData, NoiseLevel) {
  const Operator k = gen_gaussian(4000, 3, 2);
  const SparseData clean = gen_sparse_data(k, 2, 0.0, 8);
  const SparseData noisy = gen_sparse_data(k, 2, 0.5, 8);
  EXPECT_EQ(clean.x_input, noisy.x_input);
  const Vector n = noisy.y - clean.y;
  EXPECT_NEAR(n.norm() / std::sqrt(4000.0), 0.5, 0.03);
  EXPECT_NEAR(n.mean(), 0.0, 0.05);
}

TEST(SparseData, DeterministicAndValidated) {
  const Operator k = gen_gaussian(10, 30, 2);
  EXPECT_EQ(gen_sparse_data(k, 5, 0.1, 3).y, gen_sparse_data(k, 5, 0.1, 3).y);
  EXPECT_NE(gen_sparse_data(k, 5, 0.1, 3).y, gen_sparse_data(k, 5, 0.1, 4).y);
  EXPECT_THROW(gen_sparse_data(k, 31, 0.1, 3), std::invalid_argument);
  EXPECT_THROW(gen_sparse_data(k, -1, 0.1, 3), std::invalid_argument);
  EXPECT_THROW(gen_sparse_data(k, 3, -0.1, 3), std::invalid_argument);
}

TEST(SparseData, FullSupportPermutation) {
  const Operator k = gen_gaussian(5, 12, 2);
  EXPECT_EQ((gen_sparse_data(k, 12, 0.0, 3).x_input.array() != 0.0).count(), 12);
}

}  // namespace
}  // namespace isobench
