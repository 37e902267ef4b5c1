#pragma once

// Training variants: batch learning, label smoothing, dynamic batch size (DBS),
// random augmentation (RA), IL only, AC only, LILAC and LS + LILAC. Each is a
// composition of the IL, standard and AC phases.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lilac/compensation.hpp"
#include "lilac/curriculum.hpp"
#include "lilac/data.hpp"

namespace lilac {

enum class VariantKind { batch, label_smoothing, dbs, ra, only_il, only_ac, lilac, ls_lilac };

std::string_view to_string(VariantKind kind);
VariantKind parse_variant(std::string_view name);
std::span<const VariantKind> all_variants();

bool uses_il(VariantKind kind);     // the revealing label schedule (lilac, ls_lilac, only_il, ra)
bool uses_window(VariantKind kind); // any IL-length prefix (uses_il kinds plus dbs)
bool uses_ac(VariantKind kind);
bool uses_ls(VariantKind kind);

/// (1 - alpha) * onehot(y) + alpha / L.
TargetVector ls_target(int label, int num_labels, double alpha);

/// Empirical distribution of balanced-batch sizes seen by an IL schedule.
class BatchSizeDistribution {
 public:
  explicit BatchSizeDistribution(std::vector<Index> sizes);

  /// Replays the partition/balancing procedure without training, recording every batch size.
  static BatchSizeDistribution from_dry_run(const Dataset& train, const Schedule& schedule, Index batch_size,
                                            Rng& rng);

  Index draw(Rng& rng) const;
  std::span<const Index> sizes() const { return sizes_; }

 private:
  std::vector<Index> sizes_;
};

/// Resizes a raw batch to `target_size`: uniform duplicates of raw entries when
/// growing, a uniform subset when shrinking, the raw batch itself when equal.
std::vector<Index> dbs_batch(std::span<const Index> raw, Index target_size, Rng& rng);

/// balance_batch variant whose U portion comes from one uniformly chosen hidden
/// class present in the raw batch (a global single-class draw if none is present).
BalancedBatch ra_balance(std::span<const Index> raw, const LabelIndex& index, const Partition& partition, Rng& rng);

struct TrainConfig {
  std::vector<Index> hidden{64};
  int epochs = 40;  // post-IL epochs; identical across variants
  Index batch_size = 32;
  OptimHyper optim;
  Schedule schedule;
  ACConfig ac;
  double ls_alpha = 0.1;
  int probe_every = 10;  // 0 disables probe and clustering metrics
  int kmeans_iters = 100;

  void validate(VariantKind kind, int num_labels) const;
};

enum class Phase { il, standard, ac };
std::string_view to_string(Phase phase);

struct EpochRecord {
  int epoch = 0;  // global, counting IL epochs first
  Phase phase = Phase::standard;
  int revealed = 0;
  double lr = 0;
  double train_loss = 0;
  double train_acc = 0;
  double test_acc = 0;
  std::optional<Index> ac_modified;
  std::optional<double> probe_acc;
  std::optional<double> cluster_acc;
};

struct TrialReport {
  VariantKind kind = VariantKind::batch;
  std::uint64_t seed = 0;
  int window_epochs = 0;  // epochs before the standard schedule starts
  std::vector<EpochRecord> rows;

  double final_test_acc() const { return rows.empty() ? 0.0 : rows.back().test_acc; }
};

/// Optional instrumentation; none of it affects training.
struct TrialHooks {
  std::function<void(const BalancedBatch&, const Partition&)> on_il_batch;
  std::function<void(std::span<const Index> raw, std::span<const Index> resized)> on_dbs_batch;
  std::function<void(int post_epoch, const ModelSnapshot<double>&, const MisclassMask&)> on_ac_mask;
};

/// Runs one trial. `rng` drives initialisation and sampling; the probe and
/// clustering metrics use their own streams derived from `probe_seed`.
TrialReport run_variant(VariantKind kind, const DatasetPair& data, const TrainConfig& config, Rng& rng,
                        std::uint64_t probe_seed = 0, const TrialHooks& hooks = {});

}  // namespace lilac
