#include "hsu/error.hpp"
#include "hsu/evaluation.hpp"
#include "hsu/labeling.hpp"
#include "hsu/synthetic.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace hsu {
namespace {

SyntheticScene small_scene(double snr = 30.0) {
  SceneConfig c;
  c.z = 4;
  c.k = 4;
  c.bands = 60;
  c.snr_db = snr;
  c.seed = 3;
  return generate_scene(c);
}

std::vector<int> argmax_labels(const Matrix& a) {
  std::vector<int> out(static_cast<std::size_t>(a.cols()));
  for (Index n = 0; n < a.cols(); ++n) {
    Index k = 0;
    a.col(n).maxCoeff(&k);
    out[static_cast<std::size_t>(n)] = static_cast<int>(k);
  }
  return out;
}

EndmemberSeeds seeds_from_labels(const std::vector<int>& labels, Index k) {
  EndmemberSeeds seeds(static_cast<std::size_t>(k));
  for (std::size_t n = 0; n < labels.size(); ++n) seeds[static_cast<std::size_t>(labels[n])].pixels.push_back(static_cast<Index>(n));
  return seeds;
}

TEST(LabelEndmembers, MeanMedianAndSignature) {
  Matrix d(2, 4);
  d << 1, 2, 3, 10, -1, -2, -3, -4;
  const HyperCube x(d, 2, 2);
  EndmemberSeeds seeds(3);
  seeds[0].name = "soil";
  seeds[0].pixels = {0, 1, 3};
  seeds[1].pixels = {0, 1, 2, 3};
  seeds[2].signature = Vector::Constant(2, 0.5);
  const EndmemberMatrix mean = label_endmembers(x, seeds);
  EXPECT_DOUBLE_EQ(mean.data(0, 0), 13.0 / 3.0);
  EXPECT_EQ(mean.data(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(mean.data(0, 1), 4.0);
  EXPECT_EQ(mean.data(0, 2), 0.5);
  EXPECT_EQ(mean.names, (std::vector<std::string>{"soil", "#2", "#3"}));
  const EndmemberMatrix med = label_endmembers(x, seeds, true);
  EXPECT_DOUBLE_EQ(med.data(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(med.data(0, 1), 2.5);
}

TEST(LabelEndmembers, Errors) {
  const HyperCube x(Matrix::Ones(2, 4), 2, 2);
  EXPECT_THROW(label_endmembers(x, {}), InvalidArgument);
  EndmemberSeeds s(1);
  EXPECT_THROW(label_endmembers(x, s), InvalidArgument);
  s[0].pixels = {4};
  EXPECT_THROW(label_endmembers(x, s), InvalidArgument);
  s[0].signature = Vector::Ones(3);
  EXPECT_THROW(label_endmembers(x, s), ShapeError);
}

TEST(ClassLabels, FromGridSortsValues) {
  const ClassLabelMap m = labels_from_grid({5, 2, 5, 9});
  EXPECT_EQ(m.class_values, (std::vector<int>{2, 5, 9}));
  Matrix want(3, 4);
  want << 0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_EQ(m.y, want);
  EXPECT_NO_THROW(m.validate());
  ClassLabelMap bad = m;
  bad.y(0, 0) = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(LabelAbundances, FclsAndSolverAgreeOnCleanData) {
  const SyntheticScene s = small_scene(std::numeric_limits<double>::infinity());
  AbundanceMethod fc;
  const AbundanceMatrix a = label_abundances(s.x, s.m_true, fc);
  EXPECT_LT(test::max_abs_diff(a.data, s.a_true.data), 1e-8);
  AbundanceMethod mu;
  mu.kind = AbundanceMethod::Kind::constrained_solver;
  mu.config.max_iters = 50;
  const AbundanceMatrix b = label_abundances(s.x, s.m_true, mu);
  EXPECT_LT(test::max_abs_diff(b.data, s.a_true.data), 1e-6);
}

TEST(Verify, TrueGroundTruthPassesAndShuffledFails) {
  const SyntheticScene s = small_scene();
  GroundTruth gt{s.m_true, s.a_true, {}};
  VerifyCriteria c;
  c.probe_count = 60;
  const VerificationReport good = verify_labeling(s.x, gt, c);
  EXPECT_EQ(good.pairs, 60 * 59 / 2);
  EXPECT_GT(good.correlation, 0.5);
  EXPECT_TRUE(good.passed);

  Matrix shuffled = s.a_true.data;
  Rng rng(1);
  for (Index n = shuffled.cols() - 1; n > 0; --n) shuffled.col(n).swap(shuffled.col(static_cast<Index>(rng() % static_cast<std::uint64_t>(n + 1))));
  gt.a = AbundanceMatrix(shuffled);
  const VerificationReport bad = verify_labeling(s.x, gt, c);
  EXPECT_LT(bad.correlation, 0.2);
  EXPECT_FALSE(bad.passed);
  EXPECT_GT(bad.reconstruction_rmse, good.reconstruction_rmse);
}

TEST(Verify, RmseLimitIsEnforced) {
  const SyntheticScene s = small_scene(10.0);
  VerifyCriteria c;
  c.max_reconstruction_rmse = 1e-6;
  EXPECT_FALSE(verify_labeling(s.x, GroundTruth{s.m_true, s.a_true, {}}, c).passed);
  c.probe_count = 1;
  EXPECT_THROW(verify_labeling(s.x, GroundTruth{s.m_true, s.a_true, {}}, c), InvalidArgument);
}

TEST(LabelGroundTruth, SeedsFromDominantCoverVerify) {
  const SyntheticScene s = small_scene();
  const EndmemberSeeds seeds = seeds_from_labels(argmax_labels(s.a_true.data), 4);
  VerifyCriteria c;
  c.probe_count = 80;
  const LabelingResult r = label_ground_truth(s.x, seeds, AbundanceMethod{}, c);
  EXPECT_TRUE(r.verified);
  EXPECT_EQ(r.rounds.size(), 1u);
  EXPECT_EQ(r.gt.notes.size(), 1u);
  EXPECT_EQ(r.gt.m.data, label_endmembers(s.x, seeds).data);
  EXPECT_LT(r.gt.a.max_sum_deviation(), 1e-12);
}

TEST(LabelGroundTruth, UnverifiableRunsAllRounds) {
  const SyntheticScene s = small_scene();
  const EndmemberSeeds seeds = seeds_from_labels(argmax_labels(s.a_true.data), 4);
  VerifyCriteria c;
  c.probe_count = 40;
  c.min_correlation = 1.1;
  c.max_rounds = 3;
  const LabelingResult r = label_ground_truth(s.x, seeds, AbundanceMethod{}, c);
  EXPECT_FALSE(r.verified);
  EXPECT_EQ(r.rounds.size(), 3u);
  EXPECT_GE(r.best_round, 0);
  EXPECT_LT(r.best_round, 3);
}

TEST(Hyc, ZeroAlphaEqualsPlainConstrainedLabeling) {
  const SyntheticScene s = small_scene();
  const ClassLabelMap labels = labels_from_grid(argmax_labels(s.a_true.data));
  HycOptions o;
  o.config.max_iters = 40;
  const GroundTruth gt = hyc_transform(s.x, labels, o);

  EndmemberSeeds seeds = seeds_from_labels(argmax_labels(s.a_true.data), 4);
  const EndmemberMatrix m = label_endmembers(s.x, seeds);
  AbundanceMethod method;
  method.kind = AbundanceMethod::Kind::constrained_solver;
  method.config.max_iters = 40;
  EXPECT_EQ(gt.m.data, m.data);
  EXPECT_EQ(gt.a.data, label_abundances(s.x, m, method).data);
}

TEST(Hyc, LargerAlphaPullsTowardsLabels) {
  const SyntheticScene s = small_scene(20.0);
  const ClassLabelMap labels = labels_from_grid(argmax_labels(s.a_true.data));
  HycOptions o;
  o.config.max_iters = 60;
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 0.1, 1.0, 10.0}) {
    o.alpha = alpha;
    const GroundTruth gt = hyc_transform(s.x, labels, o);
    const double dist = (gt.a.data - labels.y).norm();
    EXPECT_LE(dist, prev + 1e-9) << alpha;
    EXPECT_LT(gt.a.max_sum_deviation(), 1e-12);
    prev = dist;
  }
}

TEST(Hyc, RefineModeMovesEndmembers) {
  const SyntheticScene s = small_scene(20.0);
  const ClassLabelMap labels = labels_from_grid(argmax_labels(s.a_true.data));
  HycOptions o;
  o.mode = HycOptions::Mode::refine_endmembers;
  o.alpha = 0.5;
  o.config.max_iters = 20;
  const GroundTruth gt = hyc_transform(s.x, labels, o);
  const EndmemberMatrix m0 = label_endmembers(s.x, seeds_from_labels(argmax_labels(s.a_true.data), 4));
  EXPECT_GT(test::max_abs_diff(gt.m.data, m0.data), 0.0);
  EXPECT_EQ(gt.m.names[0], "class 0");
}

TEST(Hyc, PurityKeepsPixelsClosestToClassMean) {
  Matrix d(2, 6);
  d << 1, 1, 1, 0, 0.5, 0.4, 0, 0.1, 0.2, 1, 2, 2;
  const HyperCube x(d, 2, 3);
  const ClassLabelMap labels = labels_from_grid({0, 0, 0, 0, 1, 1});
  HycOptions o;
  o.config.max_iters = 0;
  EndmemberSeeds seeds(2);
  seeds[1].pixels = {4};
  for (const auto& [purity, kept] : std::vector<std::pair<double, std::vector<Index>>>{
           {1.0, {0, 1, 2, 3}}, {0.5, {1, 2}}, {0.3, {1, 2}}, {0.2, {2}}}) {
    o.purity = purity;
    seeds[0].pixels = kept;
    EXPECT_EQ(hyc_transform(x, labels, o).m.data.col(0), label_endmembers(x, seeds).data.col(0)) << purity;
  }
}

TEST(Hyc, Errors) {
  const SyntheticScene s = small_scene();
  ClassLabelMap labels = labels_from_grid(std::vector<int>(10, 1));
  EXPECT_THROW(hyc_transform(s.x, labels, {}), ShapeError);
  labels = labels_from_grid(argmax_labels(s.a_true.data));
  HycOptions o;
  o.alpha = -1.0;
  EXPECT_THROW(hyc_transform(s.x, labels, o), InvalidArgument);
  o.alpha = 0.0;
  for (double purity : {0.0, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    o.purity = purity;
    EXPECT_THROW(hyc_transform(s.x, labels, o), InvalidArgument);
  }
}

}  // namespace
}  // namespace hsu
