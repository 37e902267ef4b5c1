#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lilac/compensation.hpp"
#include "oracles.hpp"

namespace lilac {
namespace {

double entropy(const TargetVector& t) {
  double h = 0;
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] > 0) h -= t[i] * std::log(t[i]);
  return h;
}

TEST(AcTarget, EpsilonOneIsOneHot) {
  for (int L : {2, 5, 10, 100}) {
    const auto t = ac_target(L - 1, L, 1.0);
    for (Index i = 0; i < L; ++i) EXPECT_EQ(t[i], i == L - 1 ? 1.0 : 0.0);
  }
}

TEST(AcTarget, TenLabelsHalfEpsilon) {
  const auto t = ac_target(3, 10, 0.5);
  EXPECT_NEAR(t[3], 0.5, 1e-15);
  for (Index i = 0; i < 10; ++i)
    if (i != 3) EXPECT_NEAR(t[i], 0.5 / 9, 1e-15);
  EXPECT_NEAR(t[0], 0.055556, 1e-6);
}

TEST(AcTarget, InverseLabelCountIsUniform) {
  for (int L : {2, 4, 10}) {
    const auto t = ac_target(0, L, 1.0 / L);
    for (Index i = 0; i < L; ++i) EXPECT_NEAR(t[i], 1.0 / L, 1e-15);
  }
}

TEST(AcTarget, RejectsSingleLabelAndBadEpsilon) {
  EXPECT_THROW(ac_target(0, 1, 0.5), ConfigError);
  EXPECT_THROW(ac_target(0, 4, 0.0), ConfigError);
  EXPECT_THROW(ac_target(0, 4, 1.5), ConfigError);
}

TEST(AcTarget, PeakStaysOnLabelAndEntropyRises) {
  for (int L : {2, 3, 4, 10, 100}) {
    const double one_hot_entropy = entropy(ac_target(0, L, 1.0));
    for (int k = 1; k <= 100; ++k) {
      const double eps = k / 100.0;
      for (int y : {0, L / 2, L - 1}) {
        const auto t = ac_target(y, L, eps);
        EXPECT_NEAR(t.probs().sum(), 1.0, 1e-12);
        EXPECT_GE(t.probs().minCoeff(), 0.0);
        if (eps * L > 1) {
          Index best = 0;
          t.probs().maxCoeff(&best);
          EXPECT_EQ(best, y);
        }
        if (eps < 1) EXPECT_GT(entropy(t), one_hot_entropy);
      }
    }
  }
}

TEST(AcConfig, RequiresPeakAboveUniform) {
  ACConfig cfg;
  cfg.epsilon = 0.1;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg.epsilon = 0.11;
  EXPECT_NO_THROW(cfg.validate(10));
  cfg.threshold = -1;
  EXPECT_THROW(cfg.validate(10), ConfigError);
}

// Features are one-hot labels, so an identity layer classifies perfectly.
Dataset one_hot_dataset(int labels, int per_label) {
  Dataset d;
  d.num_labels = labels;
  for (int y = 0; y < labels; ++y) d.labels.insert(d.labels.end(), static_cast<std::size_t>(per_label), y);
  d.features = Matrix::Zero(static_cast<Index>(d.labels.size()), labels);
  for (std::size_t i = 0; i < d.labels.size(); ++i) d.features(static_cast<Index>(i), d.labels[i]) = 1.0;
  return d;
}

Model identity_model(int labels) {
  return Model({Dense<double>{Matrix::Identity(labels, labels), RowVector::Zero(labels), Activation::none}});
}

TEST(MarkMisclassified, PerfectSnapshotMarksNothing) {
  const Dataset d = one_hot_dataset(4, 6);
  const auto mask = mark_misclassified(snapshot(identity_model(4)), d);
  EXPECT_EQ(mask.count(), 0);
  EXPECT_EQ(mask.flags.size(), d.labels.size());
}

TEST(MarkMisclassified, ZeroLogitsTieBreakToLabelZero) {
  const Dataset d = one_hot_dataset(4, 6);
  const std::vector<Index> widths{4, 4};
  const auto mask = mark_misclassified(snapshot(Model::zeros(widths)), d);
  for (std::size_t i = 0; i < d.labels.size(); ++i) EXPECT_EQ(mask[static_cast<Index>(i)], d.labels[i] != 0);
  EXPECT_EQ(mask.count(), 18);
}

TEST(MarkMisclassified, MatchesPredictThenCompareOracle) {
  BlobSpec spec;
  spec.classes = 5;
  spec.per_class = 40;
  spec.dim = 6;
  const Dataset d = make_blobs(spec).train;
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Model model = oracle::random_model(rng, 6, 5);
    EXPECT_EQ(mark_misclassified(snapshot(model), d).count(), oracle::count_misclassified(model, d.features, d.labels));
  }
}

struct Fixture {
  Dataset train;
  Model start;
  Fixture() {
    BlobSpec spec;
    spec.classes = 4;
    spec.per_class = 30;
    spec.dim = 5;
    spec.separation = 2.0;  // overlapping, so a random net makes mistakes
    train = make_blobs(spec).train;
    Rng rng(21);
    const std::vector<Index> widths{5, 10, 4};
    start = Model::glorot(widths, rng);
  }
};

TEST(AcEpoch, EmptyMaskMatchesPlainEpoch) {
  const Fixture f;
  // A snapshot that is right on every training sample.
  Dataset d = one_hot_dataset(4, 30);
  d.features = Matrix::Zero(d.size(), 5);
  for (Index i = 0; i < d.size(); ++i) d.features(i, d.labels[static_cast<std::size_t>(i)]) = 1.0;
  Matrix w = Matrix::Zero(5, 4);
  w.topRows(4) = Matrix::Identity(4, 4);
  const auto perfect = snapshot(Model({Dense<double>{w, RowVector::Zero(4), Activation::none}}));
  for (double alpha : {0.0, 0.1}) {
    Trainee a{f.start, OptimHyper{}, {}}, b{f.start, OptimHyper{}, {}};
    Rng ra(9), rb(9);
    ACConfig cfg;
    const auto ac = ac_epoch(a, perfect, d, cfg, 0.05, 0, 16, alpha, ra);
    const auto plain = plain_epoch(b, 0.05, d, 16, alpha, rb);
    EXPECT_EQ(ac.mask.count(), 0);
    EXPECT_EQ(ac.stats.loss, plain.loss);
    EXPECT_TRUE(a.model == b.model);
  }
}

TEST(AcEpoch, EpsilonOneMatchesPlainEpoch) {
  const Fixture f;
  Trainee a{f.start, OptimHyper{}, {}}, b{f.start, OptimHyper{}, {}};
  Rng ra(4), rb(4);
  ACConfig cfg;
  cfg.epsilon = 1.0;
  const auto ac = ac_epoch(a, snapshot(f.start), f.train, cfg, 0.05, 0, 16, 0.0, ra);
  const auto plain = plain_epoch(b, 0.05, f.train, 16, 0.0, rb);
  EXPECT_GT(ac.mask.count(), 0);
  EXPECT_EQ(ac.stats.loss, plain.loss);
  EXPECT_TRUE(a.model == b.model);
}

TEST(AcEpoch, SmoothedCountEqualsMaskPopcount) {
  const Fixture f;
  Trainee t{f.start, OptimHyper{}, {}};
  Rng rng(5);
  ACConfig cfg;
  auto previous = snapshot(t.model, 0);
  for (int epoch = 1; epoch <= 5; ++epoch) {
    const Index expected = oracle::count_misclassified(previous.model(), f.train.features, f.train.labels);
    auto result = ac_epoch(t, previous, f.train, cfg, 0.05, epoch, 16, 0.0, rng);
    EXPECT_EQ(result.stats.smoothed, expected);
    EXPECT_EQ(result.mask.count(), expected);
    EXPECT_EQ(result.mask.epoch, epoch - 1);
    EXPECT_EQ(result.next.epoch(), epoch);
    EXPECT_TRUE(result.next.model() == t.model);
    previous = result.next;
  }
}

TEST(AcEpoch, MaskDependsOnlyOnPreviousSnapshot) {
  const Fixture f;
  const auto previous = snapshot(f.start);
  const auto expected = mark_misclassified(previous, f.train);
  // Different in-epoch models, same snapshot: same mask.
  Rng init(99);
  const std::vector<Index> widths{5, 10, 4};
  for (int k = 0; k < 3; ++k) {
    Trainee t{Model::glorot(widths, init), OptimHyper{}, {}};
    Rng rng(1);
    EXPECT_EQ(ac_epoch(t, previous, f.train, ACConfig{}, 0.05, 0, 16, 0.0, rng).mask.flags, expected.flags);
  }
}

TEST(AcEpoch, BeforeThresholdIsConfigError) {
  const Fixture f;
  Trainee t{f.start, OptimHyper{}, {}};
  Rng rng(1);
  ACConfig cfg;
  cfg.threshold = 3;
  EXPECT_THROW(ac_epoch(t, snapshot(f.start), f.train, cfg, 0.05, 2, 16, 0.0, rng), ConfigError);
}

}  // namespace
}  // namespace lilac
