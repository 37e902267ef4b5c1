#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "lilac/baselines.hpp"
#include "oracles.hpp"

namespace lilac {
namespace {

TEST(LsTarget, Examples) {
  const auto zero = ls_target(4, 10, 0.0);
  for (Index i = 0; i < 10; ++i) EXPECT_EQ(zero[i], i == 4 ? 1.0 : 0.0);
  const auto t = ls_target(0, 10, 0.1);
  EXPECT_NEAR(t[0], 0.91, 1e-15);
  for (Index i = 1; i < 10; ++i) EXPECT_NEAR(t[i], 0.01, 1e-15);
}

TEST(LsTarget, SumsToOne) {
  for (int L : {2, 10, 100})
    for (double alpha : {0.0, 0.05, 0.1, 0.5, 0.9}) EXPECT_NEAR(ls_target(L / 2, L, alpha).probs().sum(), 1.0, 1e-12);
  EXPECT_THROW(ls_target(0, 10, 1.0), ConfigError);
}

TEST(DbsBatch, EqualSizeUnchanged) {
  const std::vector<Index> raw{5, 1, 9, 2};
  Rng rng(1);
  EXPECT_EQ(dbs_batch(raw, 4, rng), raw);
}

TEST(DbsBatch, GrowsWithDuplicatesOfRawEntries) {
  const std::vector<Index> raw{10, 11, 12, 13, 14, 15, 16, 17};
  Rng rng(2);
  const auto out = dbs_batch(raw, 12, rng);
  ASSERT_EQ(out.size(), 12u);
  EXPECT_EQ(std::vector<Index>(out.begin(), out.begin() + 8), raw);
  for (std::size_t k = 8; k < 12; ++k) EXPECT_NE(std::find(raw.begin(), raw.end(), out[k]), raw.end());
}

TEST(DbsBatch, ShrinksToSubset) {
  const std::vector<Index> raw{10, 11, 12, 13, 14, 15, 16, 17};
  Rng rng(3);
  const auto out = dbs_batch(raw, 3, rng);
  const std::set<Index> unique(out.begin(), out.end());
  EXPECT_EQ(unique.size(), 3u);
  for (Index i : out) EXPECT_NE(std::find(raw.begin(), raw.end(), i), raw.end());
}

Dataset blocks(int labels, int n) {
  Dataset d;
  d.num_labels = labels;
  for (int y = 0; y < labels; ++y) d.labels.insert(d.labels.end(), static_cast<std::size_t>(n), y);
  d.features = Matrix::Zero(static_cast<Index>(d.labels.size()), 1);
  return d;
}

Schedule half_schedule(int b) {
  Schedule s;
  s.initial = b;
  s.step = 2;
  s.interval_epochs = 2;
  return s;
}

TEST(RaBalance, HiddenEntriesComeFromOneClassInBatch) {
  const Dataset d = blocks(10, 10);
  const LabelIndex index(d);
  const Partition p = init_partition(10, half_schedule(5));
  const std::vector<Index> raw{0, 1, 12, 23, 34, 70, 71, 72, 80, 81};
  Rng rng(4);
  std::set<int> chosen_classes;
  for (int trial = 0; trial < 200; ++trial) {
    const auto out = ra_balance(raw, index, p, rng);
    ASSERT_EQ(out.indices.size(), 10u);  // 2 * n_S
    std::set<int> classes;
    for (std::size_t k = 5; k < out.indices.size(); ++k) {
      EXPECT_EQ(out.targets[k], 9);
      classes.insert(index.label_of(out.indices[k]));
    }
    ASSERT_EQ(classes.size(), 1u);
    EXPECT_TRUE(*classes.begin() == 7 || *classes.begin() == 8);
    chosen_classes.insert(*classes.begin());
  }
  EXPECT_EQ(chosen_classes, (std::set<int>{7, 8}));
}

TEST(RaBalance, FullyRevealedIsUnchanged) {
  const Dataset d = blocks(4, 5);
  const Partition p = init_partition(4, half_schedule(4));
  const std::vector<Index> raw{3, 7, 19};
  Rng rng(5);
  EXPECT_EQ(ra_balance(raw, LabelIndex(d), p, rng).indices, raw);
}

TEST(RaBalance, NoHiddenInBatchDrawsOneGlobalClass) {
  const Dataset d = blocks(10, 10);
  const LabelIndex index(d);
  const Partition p = init_partition(10, half_schedule(5));
  const std::vector<Index> raw{0, 11, 22};
  Rng rng(6);
  const auto out = ra_balance(raw, index, p, rng);
  ASSERT_EQ(out.indices.size(), 6u);
  std::set<int> classes;
  for (std::size_t k = 3; k < 6; ++k) classes.insert(index.label_of(out.indices[k]));
  ASSERT_EQ(classes.size(), 1u);
  EXPECT_FALSE(p.is_revealed(*classes.begin()));
}

TEST(BatchSizeDistribution, DryRunRecordsEveryBatch) {
  BlobSpec spec;
  spec.classes = 6;
  spec.per_class = 20;
  spec.dim = 4;
  const Dataset train = make_blobs(spec).train;
  Rng rng(7);
  const auto dist = BatchSizeDistribution::from_dry_run(train, half_schedule(2), 16, rng);
  // 3 intervals * 2 epochs * ceil(96 / 16) batches
  EXPECT_EQ(dist.sizes().size(), 36u);
  for (Index s : dist.sizes()) {
    EXPECT_GE(s, 1);
    EXPECT_LE(s, 32);
  }
}

TEST(Variants, NamesRoundTrip) {
  for (auto kind : all_variants()) EXPECT_EQ(parse_variant(to_string(kind)), kind);
  EXPECT_EQ(all_variants().size(), 8u);
  EXPECT_THROW(parse_variant("fixed_curriculum"), ConfigError);
}

struct Desk {
  DatasetPair data;
  TrainConfig config;
  Desk() {
    BlobSpec spec;
    spec.classes = 6;
    spec.per_class = 40;
    spec.dim = 8;
    spec.separation = 3.0;
    data = make_blobs(spec);
    config.hidden = {16};
    config.epochs = 8;
    config.batch_size = 16;
    config.optim.milestones = {5};
    config.schedule = half_schedule(2);
    config.ac.threshold = 3;
    config.probe_every = 0;
  }
};

TrialReport run(VariantKind kind, const Desk& desk, std::uint64_t seed, const TrialHooks& hooks = {}) {
  Rng rng(seed);
  return run_variant(kind, desk.data, desk.config, rng, seed, hooks);
}

void expect_same_metrics(const TrialReport& a, const TrialReport& b) {
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].epoch, b.rows[i].epoch);
    EXPECT_EQ(a.rows[i].lr, b.rows[i].lr);
    EXPECT_EQ(a.rows[i].train_loss, b.rows[i].train_loss);
    EXPECT_EQ(a.rows[i].train_acc, b.rows[i].train_acc);
    EXPECT_EQ(a.rows[i].test_acc, b.rows[i].test_acc);
    EXPECT_EQ(a.rows[i].probe_acc, b.rows[i].probe_acc);
    EXPECT_EQ(a.rows[i].cluster_acc, b.rows[i].cluster_acc);
  }
}

TEST(RunVariant, DegenerateLilacMatchesBatch) {
  Desk desk;
  desk.config.schedule.initial = 6;
  desk.config.ac.epsilon = 1.0;
  desk.config.probe_every = 4;
  const auto batch = run(VariantKind::batch, desk, 3);
  const auto lilac = run(VariantKind::lilac, desk, 3);
  expect_same_metrics(batch, lilac);
  EXPECT_EQ(lilac.window_epochs, 0);
}

TEST(RunVariant, OnlyIlConsumesIntervalEpochs) {
  const Desk desk;
  const auto report = run(VariantKind::only_il, desk, 1);
  const int il = il_epochs(6, desk.config.schedule);  // ceil(4 / 2) + 1 = 3 intervals of 2
  EXPECT_EQ(il, 6);
  EXPECT_EQ(report.window_epochs, il);
  ASSERT_EQ(report.rows.size(), static_cast<std::size_t>(il + desk.config.epochs));
  for (int e = 0; e < il; ++e) EXPECT_EQ(report.rows[static_cast<std::size_t>(e)].phase, Phase::il);
  for (std::size_t e = static_cast<std::size_t>(il); e < report.rows.size(); ++e)
    EXPECT_EQ(report.rows[e].phase, Phase::standard);
}

TEST(RunVariant, OnlyAcMatchesBatchBeforeThreshold) {
  const Desk desk;
  const auto batch = run(VariantKind::batch, desk, 8);
  const auto only_ac = run(VariantKind::only_ac, desk, 8);
  for (int e = 0; e < desk.config.ac.threshold; ++e) {
    const auto& a = batch.rows[static_cast<std::size_t>(e)];
    const auto& b = only_ac.rows[static_cast<std::size_t>(e)];
    EXPECT_EQ(a.train_loss, b.train_loss);
    EXPECT_EQ(a.test_acc, b.test_acc);
    EXPECT_EQ(b.ac_modified, std::optional<Index>(0));
    EXPECT_FALSE(a.ac_modified.has_value());
  }
  EXPECT_EQ(only_ac.rows[static_cast<std::size_t>(desk.config.ac.threshold)].phase, Phase::ac);
}

TEST(RunVariant, PhaseAccountingForEveryVariant) {
  const Desk desk;
  const int il = il_epochs(6, desk.config.schedule);
  for (auto kind : all_variants()) {
    SCOPED_TRACE(std::string(to_string(kind)));
    const auto report = run(kind, desk, 2);
    const int window = uses_window(kind) ? il : 0;
    EXPECT_EQ(report.window_epochs, window);
    ASSERT_EQ(report.rows.size(), static_cast<std::size_t>(window + desk.config.epochs));
    int order = 0;
    for (std::size_t e = 0; e < report.rows.size(); ++e) {
      const auto& row = report.rows[e];
      EXPECT_EQ(row.epoch, static_cast<int>(e));
      const int rank = row.phase == Phase::il ? 0 : row.phase == Phase::standard ? 1 : 2;
      EXPECT_GE(rank, order);
      order = rank;
      const int post = static_cast<int>(e) - window;
      if (post >= 0) {
        const bool ac_phase = uses_ac(kind) && post >= desk.config.ac.threshold;
        EXPECT_EQ(row.phase == Phase::ac, ac_phase);
        EXPECT_EQ(row.lr, lr_at_epoch(desk.config.optim, post));
      }
      EXPECT_EQ(row.ac_modified.has_value(), uses_ac(kind) && post >= 0);
    }
  }
}

TEST(RunVariant, AcModifiedEqualsSnapshotMisclassifications) {
  const Desk desk;
  std::vector<std::pair<int, Index>> seen;
  TrialHooks hooks;
  hooks.on_ac_mask = [&](int post_epoch, const ModelSnapshot<double>& snap, const MisclassMask& mask) {
    EXPECT_EQ(mask.count(), oracle::count_misclassified(snap.model(), desk.data.train.features, desk.data.train.labels));
    seen.emplace_back(post_epoch, mask.count());
  };
  const auto report = run(VariantKind::lilac, desk, 4, hooks);
  ASSERT_EQ(seen.size(), static_cast<std::size_t>(desk.config.epochs - desk.config.ac.threshold));
  for (const auto& [post, count] : seen)
    EXPECT_EQ(report.rows[static_cast<std::size_t>(report.window_epochs + post)].ac_modified, std::optional<Index>(count));
}

TEST(RunVariant, RhoTargetsOnlyWhileLabelsHidden) {
  const Desk desk;
  for (auto kind : {VariantKind::lilac, VariantKind::ra}) {
    int rho_batches = 0, unbalanced = 0;
    TrialHooks hooks;
    hooks.on_il_batch = [&](const BalancedBatch& batch, const Partition& p) {
      const Index rho_entries = static_cast<Index>(batch.indices.size()) - batch.revealed_entries;
      if (p.fully_revealed()) EXPECT_EQ(rho_entries, 0);
      if (rho_entries > 0) ++rho_batches;
      if (batch.revealed_entries > 0 && rho_entries > 0 && rho_entries != batch.revealed_entries) ++unbalanced;
    };
    run(kind, desk, 5, hooks);
    EXPECT_GT(rho_batches, 0);
    EXPECT_EQ(unbalanced, 0);
  }
}

TEST(RunVariant, DbsResizesRawBatchesWithoutPseudoLabels) {
  const Desk desk;
  int batches = 0;
  TrialHooks hooks;
  hooks.on_dbs_batch = [&](std::span<const Index> raw, std::span<const Index> resized) {
    ++batches;
    for (Index i : resized) EXPECT_NE(std::find(raw.begin(), raw.end(), i), raw.end());
  };
  hooks.on_il_batch = [](const BalancedBatch&, const Partition&) { ADD_FAILURE() << "dbs ran IL balancing"; };
  run(VariantKind::dbs, desk, 6, hooks);
  EXPECT_EQ(batches, il_epochs(6, desk.config.schedule) * 12);  // 192 train samples / 16
}

TEST(RunVariant, ThresholdPastEpochsIsConfigError) {
  Desk desk;
  desk.config.ac.threshold = desk.config.epochs;
  EXPECT_THROW(run(VariantKind::lilac, desk, 1), ConfigError);
  EXPECT_NO_THROW(run(VariantKind::batch, desk, 1));
}

TEST(RunVariant, InitialAboveLabelCountIsConfigError) {
  Desk desk;
  desk.config.schedule.initial = 7;
  EXPECT_THROW(run(VariantKind::only_il, desk, 1), ConfigError);
}

TEST(RunVariant, SeedsControlOutcome) {
  const Desk desk;
  const auto a = run(VariantKind::lilac, desk, 10);
  const auto b = run(VariantKind::lilac, desk, 10);
  const auto c = run(VariantKind::lilac, desk, 11);
  expect_same_metrics(a, b);
  bool differs = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) differs = differs || a.rows[i].train_loss != c.rows[i].train_loss;
  EXPECT_TRUE(differs);
}

TEST(RunVariant, ProbeCadence) {
  Desk desk;
  desk.config.probe_every = 3;
  const auto report = run(VariantKind::batch, desk, 1);
  for (const auto& row : report.rows) {
    const bool probed = (row.epoch + 1) % 3 == 0;
    EXPECT_EQ(row.probe_acc.has_value(), probed);
    EXPECT_EQ(row.cluster_acc.has_value(), probed);
  }
}

}  // namespace
}  // namespace lilac
