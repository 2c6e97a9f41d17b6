#include "hsu/error.hpp"
#include "hsu/evaluation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace hsu {
namespace {

TEST(Sad, ReferenceAngles) {
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  EXPECT_NEAR(sad(a, b), std::numbers::pi / 2, 1e-15);
  b << 1, 1;
  EXPECT_NEAR(sad(a, b), std::numbers::pi / 4, 1e-15);
  EXPECT_EQ(sad(a, Vector(3.0 * a)), 0.0);
  EXPECT_NEAR(sad(a, Vector(-a)), std::numbers::pi, 1e-15);
  EXPECT_THROW(sad(a, Vector::Zero(2)), InvalidArgument);
  EXPECT_THROW(sad(a, Vector::Ones(3)), ShapeError);
}

TEST(Rmse, ReferenceValues) {
  Vector a(4), b(4);
  a << 0, 0, 0, 0;
  b << 1, 1, 1, 1;
  EXPECT_DOUBLE_EQ(rmse(a, b), 1.0);
  b << 2, 0, 0, 0;
  EXPECT_DOUBLE_EQ(rmse(a, b), 1.0);
  b << 0.3, 0.4, 0, 0;
  EXPECT_DOUBLE_EQ(rmse(a, b), 0.25);
}

// Exhaustive oracle over all K! assignments.
double brute_min_cost(const Matrix& cost) {
  std::vector<Index> p(static_cast<std::size_t>(cost.rows()));
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (Index i = 0; i < cost.rows(); ++i) c += cost(i, p[static_cast<std::size_t>(i)]);
    best = std::min(best, c);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

TEST(Match, MatchesExhaustivePermutationSearch) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Index k = 2 + t % 6;
    const Matrix gt = test::uniform_matrix(12, k, rng);
    const Matrix est = test::uniform_matrix(12, k, rng);
    const std::vector<Index> perm = match_endmembers(gt, est);
    std::vector<Index> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < k; ++i) ASSERT_EQ(sorted[static_cast<std::size_t>(i)], i);
    const Matrix cost = sad_matrix(gt, est);
    double got = 0.0;
    for (Index i = 0; i < k; ++i) got += cost(i, perm[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(got, brute_min_cost(cost), 1e-12) << "case " << t;
  }
}

TEST(Match, RecoversShuffledAndScaledColumns) {
  Rng rng(2);
  const Matrix gt = test::uniform_matrix(20, 5, rng);
  const std::vector<Index> shuffle = {3, 0, 4, 1, 2};
  Matrix est(20, 5);
  for (Index j = 0; j < 5; ++j) est.col(j) = (j + 1.5) * gt.col(shuffle[static_cast<std::size_t>(j)]);
  const std::vector<Index> perm = match_endmembers(gt, est);
  for (Index j = 0; j < 5; ++j) EXPECT_EQ(perm[static_cast<std::size_t>(shuffle[static_cast<std::size_t>(j)])], j);
}

TEST(Match, TiesResolveToLowestIndex) {
  const Matrix gt = Matrix::Ones(3, 2);
  EXPECT_EQ(match_endmembers(gt, gt), (std::vector<Index>{0, 1}));
}

TEST(Match, Errors) {
  EXPECT_THROW(match_endmembers(Matrix::Ones(3, 2), Matrix::Ones(3, 3)), ShapeError);
  EXPECT_THROW(match_endmembers(Matrix::Ones(3, 21), Matrix::Ones(3, 21)), InvalidArgument);
}

GroundTruth random_gt(Rng& rng, Index l, Index k, Index n) {
  GroundTruth gt;
  gt.m = EndmemberMatrix(test::uniform_matrix(l, k, rng));
  gt.a = AbundanceMatrix(test::simplex_columns(k, n, rng));
  return gt;
}

TEST(Evaluate, PerfectEstimateScoresZero) {
  Rng rng(3);
  const GroundTruth gt = random_gt(rng, 10, 4, 30);
  const BenchmarkReport r = evaluate(gt, gt.m, gt.a);
  EXPECT_NEAR(r.mean_sad, 0.0, 1e-7);
  EXPECT_NEAR(r.mean_rmse, 0.0, 1e-15);
  EXPECT_EQ(r.names, gt.m.names);
}

TEST(Evaluate, InvariantToColumnOrderAndScale) {
  Rng rng(4);
  const GroundTruth gt = random_gt(rng, 10, 4, 30);
  const Matrix m_est = gt.m.data + test::uniform_matrix(10, 4, rng, 0.0, 0.1);
  const Matrix a_est = gt.a.data + test::uniform_matrix(4, 30, rng, 0.0, 0.05);
  const BenchmarkReport base = evaluate(gt, EndmemberMatrix(m_est), AbundanceMatrix(a_est));
  const std::vector<Index> order = {2, 0, 3, 1};
  Matrix m_perm(10, 4), a_perm(4, 30);
  for (Index j = 0; j < 4; ++j) {
    m_perm.col(j) = 4.0 * m_est.col(order[static_cast<std::size_t>(j)]);
    a_perm.row(j) = a_est.row(order[static_cast<std::size_t>(j)]);
  }
  const BenchmarkReport moved = evaluate(gt, EndmemberMatrix(m_perm), AbundanceMatrix(a_perm));
  EXPECT_LT((base.sad - moved.sad).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((base.rmse - moved.rmse).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evaluate, ProjectionClipsAndNormalises) {
  GroundTruth gt;
  Matrix m(2, 2);
  m << 1, 0, 0, 1;
  gt.m = EndmemberMatrix(m);
  Matrix a(2, 1);
  a << 1, 0;
  gt.a = AbundanceMatrix(a);
  Matrix est(2, 1);
  est << 2, -1;
  EXPECT_NEAR(evaluate(gt, gt.m, AbundanceMatrix(est)).mean_rmse, 0.0, 1e-15);
  // Unprojected: errors 1 and 1.
  EXPECT_NEAR(evaluate(gt, gt.m, AbundanceMatrix(est), false).mean_rmse, 1.0, 1e-15);
}

TEST(Evaluate, ShapeErrors) {
  Rng rng(5);
  const GroundTruth gt = random_gt(rng, 10, 3, 20);
  EXPECT_THROW(evaluate(gt, EndmemberMatrix(Matrix::Ones(10, 2)), gt.a), ShapeError);
  EXPECT_THROW(evaluate(gt, EndmemberMatrix(Matrix::Ones(9, 3)), gt.a), ShapeError);
  EXPECT_THROW(evaluate(gt, gt.m, AbundanceMatrix(Matrix::Ones(3, 19))), ShapeError);
}

TEST(Spearman, FrozenReferenceValues) {
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}), 0.8207826816681233, 1e-14);
  EXPECT_NEAR(spearman({1, 2, 2, 3, 10, 0.5}, {3, 1, 4, 1, 5, 9}), -0.27941176470588236, 1e-14);
  EXPECT_NEAR(spearman({0.1, 0.4, 0.35, 0.8}, {1, 2, 3, 4}), 0.8, 1e-14);
}

TEST(Spearman, EdgeCases) {
  EXPECT_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_EQ(spearman({1}, {2}), 0.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {30, 20, 10}), -1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3}, {1, 8, 27}), 1.0);
  EXPECT_THROW(spearman({1, 2}, {1}), ShapeError);
}

}  // namespace
}  // namespace hsu
