#include "hsu/error.hpp"
#include "hsu/graph.hpp"
#include "hsu/solvers.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace hsu {
namespace {

struct Problem {
  Matrix x;
  EndmemberMatrix m;
  AbundanceMatrix a;
};

Problem random_problem(Index l, Index n, Index k, std::uint64_t seed) {
  Rng rng(seed);
  Problem p;
  p.x = test::uniform_matrix(l, n, rng);
  p.m = EndmemberMatrix(test::uniform_matrix(l, k, rng, 0.05, 1.0));
  p.a = AbundanceMatrix(test::simplex_columns(k, n, rng));
  return p;
}

HyperCube as_cube(const Matrix& x) { return HyperCube(x, 1, x.cols()); }

// Loop-level transcription of one Lee-Seung step on the delta-augmented
// system: M on the real bands, then A with the delta row appended.
void scalar_nmf_step(const Matrix& x, Matrix& m, Matrix& a, double delta) {
  const Index l = x.rows(), n = x.cols(), k = m.cols();
  Matrix m_new(l, k);
  for (Index i = 0; i < l; ++i) {
    for (Index j = 0; j < k; ++j) {
      double num = 0.0, den = 0.0;
      for (Index p = 0; p < n; ++p) num += x(i, p) * a(j, p);
      for (Index q = 0; q < k; ++q) {
        double aat = 0.0;
        for (Index p = 0; p < n; ++p) aat += a(q, p) * a(j, p);
        den += m(i, q) * aat;
      }
      m_new(i, j) = m(i, j) * num / (den + 1e-12);
    }
  }
  Matrix mt(l + 1, k), xt(l + 1, n);
  mt.topRows(l) = m_new;
  mt.row(l).setConstant(delta);
  xt.topRows(l) = x;
  xt.row(l).setConstant(delta);
  Matrix a_new(k, n);
  for (Index j = 0; j < k; ++j) {
    for (Index p = 0; p < n; ++p) {
      double num = 0.0, den = 0.0;
      for (Index i = 0; i <= l; ++i) {
        num += mt(i, j) * xt(i, p);
        double ma = 0.0;
        for (Index q = 0; q < k; ++q) ma += mt(i, q) * a(q, p);
        den += mt(i, j) * ma;
      }
      a_new(j, p) = a(j, p) * num / (den + 1e-12);
    }
  }
  m = m_new;
  a = a_new;
}

TEST(Variant, ParseRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("pca"), InvalidArgument);
  EXPECT_TRUE(needs_graph(Variant::glnmf));
  EXPECT_FALSE(needs_graph(Variant::dgs));
  EXPECT_FALSE(is_multiplicative(Variant::mvcnmf));
}

TEST(SolverConfig, ValidateRejectsBadValues) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.sigma = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.armijo.shrink = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.xi = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Gini, ReferenceValues) {
  Vector one_hot = Vector::Zero(4);
  one_hot(2) = 3.0;
  EXPECT_NEAR(gini_sparsity(one_hot), 0.75, 1e-15);
  EXPECT_NEAR(gini_sparsity(Vector::Constant(5, 0.2)), 0.0, 1e-15);
  Vector ramp(4);
  ramp << 4, 1, 3, 2;
  EXPECT_NEAR(gini_sparsity(ramp), 0.25, 1e-15);
  EXPECT_THROW(gini_sparsity(Vector::Zero(3)), InvalidArgument);
}

TEST(Gini, ScaleInvariantAndBounded) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vector a = test::uniform_matrix(6, 1, rng);
    const double g = gini_sparsity(a);
    EXPECT_GE(g, 0.0);
    EXPECT_LT(g, 1.0);
    EXPECT_NEAR(gini_sparsity(Vector(7.0 * a)), g, 1e-14);
  }
}

TEST(MultiplicativeStep, NmfMatchesScalarOracle) {
  const Problem p = random_problem(7, 9, 3, 21);
  SolverConfig c;
  c.asc_delta = 2.5;
  SolverState s = make_state(p.m, p.a, Variant::nmf);
  Matrix m = p.m.data, a = p.a.data;
  for (int it = 0; it < 3; ++it) {
    s = multiplicative_step(s, p.x, Variant::nmf, c);
    scalar_nmf_step(p.x, m, a, 2.5);
  }
  EXPECT_LT(test::max_abs_diff(s.m, m), 1e-12);
  EXPECT_LT(test::max_abs_diff(s.a, a), 1e-12);
  EXPECT_EQ(s.iter, 3);
  EXPECT_EQ(s.objective_history.size(), 3u);
}

TEST(Objective, NmfIsHalfAugmentedResidual) {
  const Problem p = random_problem(5, 6, 2, 3);
  SolverConfig c;
  c.asc_delta = 3.0;
  const SolverState s = make_state(p.m, p.a, Variant::nmf);
  Matrix a = p.a.data;
  a(0, 0) += 0.2;
  SolverState t = s;
  t.a = a;
  const double want = 0.5 * (p.x - p.m.data * a).squaredNorm() +
                      0.5 * 9.0 * (1.0 - a.colwise().sum().array()).square().sum();
  EXPECT_NEAR(objective(Variant::nmf, p.x, t, c), want, 1e-12);
}

TEST(MultiplicativeStep, DgsReducesToL1AndL12) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Problem p = random_problem(12, 30, 4, 100 + seed);
    SolverConfig c;
    c.lambda = 0.3;
    SolverState s = make_state(p.m, p.a, Variant::l1);
    const SolverState l1 = multiplicative_step(s, p.x, Variant::l1, c);
    const SolverState l12 = multiplicative_step(s, p.x, Variant::l12, c);
    s.h = Vector::Zero(p.x.cols());
    const SolverState dgs0 = multiplicative_step(s, p.x, Variant::dgs, c);
    s.h = Vector::Constant(p.x.cols(), 0.5);
    const SolverState dgs_half = multiplicative_step(s, p.x, Variant::dgs, c);
    EXPECT_LE(test::max_abs_diff(dgs0.a, l1.a), 1e-12);
    EXPECT_LE(test::max_abs_diff(dgs0.m, l1.m), 1e-12);
    EXPECT_LE(test::max_abs_diff(dgs_half.a, l12.a), 1e-12);
  }
}

TEST(Steps, ExactDataIsAFixedPoint) {
  Rng rng(31);
  const Matrix m = test::uniform_matrix(10, 3, rng, 0.1, 1.0);
  const Matrix a = test::simplex_columns(3, 40, rng);
  const Matrix x = m * a;
  const LaplacianPair g = build_graph(as_cube(x), {});
  SolveContext ctx;
  ctx.graph = &g;
  SolverConfig c;
  c.sigma = 1.0;
  const PcaBasis pca = principal_subspace(x, 2);
  for (Variant v : kAllVariants) {
    if (v == Variant::mvcnmf) continue;
    const SolverState s0 = make_state(EndmemberMatrix(m), AbundanceMatrix(a), v, ctx);
    const SolverState s1 = step(s0, x, v, c, ctx, &pca);
    EXPECT_LE(test::max_abs_diff(s1.m, m), 1e-10) << to_string(v);
    EXPECT_LE(test::max_abs_diff(s1.a, a), 1e-10) << to_string(v);
  }
}

class Monotone : public ::testing::TestWithParam<Variant> {};

TEST_P(Monotone, RecordedObjectiveNeverIncreases) {
  const Variant v = GetParam();
  const Problem p = random_problem(20, 120, 3, 77);
  const HyperCube cube = as_cube(p.x);
  const LaplacianPair g = build_graph(cube, {});
  SolveContext ctx;
  ctx.graph = &g;
  SolverConfig c;
  c.lambda = 0.1;
  c.alpha = 0.05;
  c.max_iters = 80;
  c.rel_tol = 0.0;
  c.sigma = 0.5;
  c.h_refresh_period = 1000;
  const SolveResult r = solve(p.x, v, c, p.m, p.a, ctx);
  ASSERT_EQ(r.objective_history.size(), 81u);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-9) << to_string(v) << " step " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, Monotone,
                         ::testing::Values(Variant::nmf, Variant::l1, Variant::l12, Variant::gnmf, Variant::dgs,
                                           Variant::ssnmf, Variant::glnmf, Variant::rrlbs, Variant::cenmf,
                                           Variant::mvcnmf),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Anchor, AnchoredObjectiveNeverIncreases) {
  Problem p = random_problem(15, 60, 3, 5);
  Rng rng(6);
  Matrix y = Matrix::Zero(3, 60);
  for (Index n = 0; n < 60; ++n) y(static_cast<Index>(rng() % 3), n) = 1.0;
  SolveContext ctx;
  ctx.anchor = &y;
  ctx.anchor_weight = 2.0;
  SolverConfig c;
  c.max_iters = 60;
  c.rel_tol = 0.0;
  c.update_endmembers = false;
  const SolveResult r = solve(p.x, Variant::nmf, c, p.m, p.a, ctx);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-9);
  }
  EXPECT_EQ(r.endmembers.data, p.m.data);
}

TEST(Rrlbs, DgMapRefreshesOnSchedule) {
  const Problem p = random_problem(10, 40, 3, 8);
  SolverConfig c;
  c.lambda = 0.1;
  c.h_refresh_period = 2;
  SolverState s = make_state(p.m, p.a, Variant::rrlbs);
  EXPECT_EQ(s.h, Vector::Zero(40));
  s = rrlbs_step(s, p.x, c);
  EXPECT_EQ(s.h, Vector::Zero(40));
  s = rrlbs_step(s, p.x, c);
  EXPECT_LT((s.h - dgmap_from_abundances(s.a)).norm(), 1e-15);
  EXPECT_GT(s.h.maxCoeff(), 0.0);
}

TEST(Cenmf, RequiresBandwidth) {
  const Problem p = random_problem(5, 10, 2, 9);
  const SolverState s = make_state(p.m, p.a, Variant::cenmf);
  EXPECT_THROW(cenmf_step(s, p.x, SolverConfig{}), InvalidArgument);
}

TEST(Cenmf, OutlierChannelsAreDownWeighted) {
  Problem p = random_problem(12, 50, 3, 10);
  p.x = p.m.data * p.a.data;
  p.x.row(4).array() += 5.0;
  SolverConfig c;
  c.sigma = 0.5;
  SolverState s = make_state(p.m, p.a, Variant::cenmf);
  s = cenmf_step(s, p.x, c);
  EXPECT_LT(s.u(4), 1e-6);
  EXPECT_GT(s.u(0), 0.99);
}

TEST(Gradients, MvcMatchesFiniteDifferences) {
  Rng rng(12);
  const Matrix x = test::uniform_matrix(6, 20, rng);
  const Matrix m = test::uniform_matrix(6, 3, rng);
  const Matrix a = test::simplex_columns(3, 20, rng);
  const PcaBasis pca = principal_subspace(x, 2);
  SolverConfig c;
  c.lambda = 0.7;
  c.asc_delta = 1.5;
  const Matrix g = mvc_gradient_m(x, m, a, c, pca);
  const double h = 1e-6;
  for (Index i = 0; i < m.size(); ++i) {
    Matrix mp = m, mm = m;
    mp.data()[i] += h;
    mm.data()[i] -= h;
    const double fd = (mvc_objective(x, mp, a, c, pca) - mvc_objective(x, mm, a, c, pca)) / (2 * h);
    EXPECT_NEAR(g.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
  const Matrix ga = mvc_gradient_a(x, m, a, c);
  for (Index i = 0; i < a.size(); ++i) {
    Matrix ap = a, am = a;
    ap.data()[i] += h;
    am.data()[i] -= h;
    const double fd = (mvc_objective(x, m, ap, c, pca) - mvc_objective(x, m, am, c, pca)) / (2 * h);
    EXPECT_NEAR(ga.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Gradients, EdcMatchesFiniteDifferences) {
  Rng rng(13);
  const Matrix m = test::uniform_matrix(6, 3, rng);
  const Matrix g = edc_dissimilarity_gradient(m);
  const double h = 1e-6;
  for (Index i = 0; i < m.size(); ++i) {
    Matrix mp = m, mm = m;
    mp.data()[i] += h;
    mm.data()[i] -= h;
    const double fd = (edc_dissimilarity(mp) - edc_dissimilarity(mm)) / (2 * h);
    EXPECT_NEAR(g.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Edc, IdenticalEndmembersHaveZeroDissimilarity) {
  const Matrix m = Vector::LinSpaced(5, 0.1, 0.9).replicate(1, 3);
  EXPECT_NEAR(edc_dissimilarity(m), 0.0, 1e-15);
  EXPECT_LT(edc_dissimilarity_gradient(m).norm(), 1e-14);
}

TEST(Edc, StepKeepsEndmembersPositive) {
  const Problem p = random_problem(12, 40, 3, 14);
  SolverConfig c;
  c.lambda = 50.0;
  const SolverState s = edcnmf_step(make_state(p.m, p.a, Variant::edcnmf), p.x, c);
  EXPECT_GT(s.m.minCoeff(), 0.0);
}

TEST(SimplexVolume, UnitTriangle) {
  Matrix p(2, 3);
  p << 0, 1, 0, 0, 0, 1;
  EXPECT_NEAR(simplex_volume(p), 0.5, 1e-15);
  EXPECT_THROW(simplex_volume(Matrix::Zero(3, 3)), ShapeError);
}

TEST(Mvc, ArmijoStallKeepsPreviousState) {
  const Problem p = random_problem(8, 30, 3, 15);
  SolverConfig c;
  c.lambda = 0.1;
  c.armijo.initial_step = 1e12;
  c.armijo.max_shrinks = 1;
  const PcaBasis pca = principal_subspace(p.x, 2);
  const SolverState s = make_state(p.m, p.a, Variant::mvcnmf);
  try {
    mvcnmf_step(s, p.x, c, pca);
    FAIL() << "expected StallError";
  } catch (const StallError& e) {
    EXPECT_EQ(e.state().iter, 0);
    EXPECT_EQ(e.state().m, p.m.data);
  }
}

TEST(Solve, DivergenceIsReported) {
  Problem p = random_problem(5, 10, 2, 16);
  p.m.data(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    solve(p.x, Variant::nmf, SolverConfig{}, p.m, p.a);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.factor(), "M");
    EXPECT_EQ(e.iteration(), 1);
  }
}

TEST(Solve, ZeroIterationsReturnsInitialFactors) {
  const Problem p = random_problem(6, 12, 2, 17);
  SolverConfig c;
  c.max_iters = 0;
  const SolveResult r = solve(p.x, Variant::l1, c, p.m, p.a);
  EXPECT_EQ(r.endmembers.data, p.m.data);
  EXPECT_EQ(r.abundances.data, p.a.data);
  EXPECT_EQ(r.objective_history.size(), 1u);
  EXPECT_EQ(r.diagnostics.iterations, 0);
}

TEST(Solve, ClampsNegativeInputsAndProjectsOutput) {
  Problem p = random_problem(6, 12, 2, 18);
  p.x(0, 0) = -0.5;
  p.x(3, 7) = -0.1;
  SolverConfig c;
  c.max_iters = 20;
  const SolveResult r = solve(p.x, Variant::nmf, c, p.m, p.a);
  EXPECT_EQ(r.diagnostics.clamped_negative_inputs, 2);
  EXPECT_LT(r.abundances.max_sum_deviation(), 1e-12);
  EXPECT_GE(r.endmembers.data.minCoeff(), 0.0);
}

TEST(Solve, ConvergesOnExactData) {
  Rng rng(19);
  const Matrix m = test::uniform_matrix(10, 3, rng, 0.1, 1.0);
  const Matrix a = test::simplex_columns(3, 30, rng);
  Matrix m0 = m;
  m0.array() *= 1.05;
  SolverConfig c;
  c.max_iters = 5000;
  c.rel_tol = 1e-4;
  const SolveResult r = solve(m * a, Variant::nmf, c, EndmemberMatrix(m0), AbundanceMatrix(a));
  EXPECT_TRUE(r.diagnostics.converged);
  EXPECT_LT(r.diagnostics.iterations, 5000);
}

TEST(Solve, GraphVariantWithoutGraphThrows) {
  const Problem p = random_problem(4, 10, 2, 20);
  EXPECT_THROW(solve(p.x, Variant::gnmf, SolverConfig{}, p.m, p.a), InvalidArgument);
}

TEST(Solve, AutoSigmaIsRecorded) {
  const Problem p = random_problem(6, 20, 2, 22);
  SolverConfig c;
  c.max_iters = 2;
  const SolveResult r = solve(p.x, Variant::cenmf, c, p.m, p.a);
  const Vector rows = (p.x - p.m.data * p.a.data).rowwise().squaredNorm();
  EXPECT_NEAR(r.diagnostics.sigma, std::sqrt(rows.mean()), 1e-12);
}

}  // namespace
}  // namespace hsu
