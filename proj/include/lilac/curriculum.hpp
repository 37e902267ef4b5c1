#pragma once

// Incremental label introduction: a revealed/hidden label partition, a reveal
// schedule, pseudo-label targets for hidden classes and balanced mini-batches.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lilac/data.hpp"
#include "lilac/training.hpp"

namespace lilac {

enum class LabelOrder { ascending, random };

struct Schedule {
  int initial = 1;         // labels revealed at the start
  int step = 1;            // labels revealed per interval
  int interval_epochs = 1; // epochs per interval
  double interval_lr = 0.1;
  LabelOrder order = LabelOrder::ascending;
  std::uint64_t order_seed = 0;

  void validate(int num_labels) const;
};

/// Revealed set S, hidden set U and pseudo-label rho.
///
/// Labels are held in reveal order: the first `revealed_count` entries are S.
/// rho is the last label in that order (L - 1 for ascending order), so it is
/// only ever revealed together with the final group and an S sample never
/// carries the rho target while U is non-empty.
class Partition {
 public:
  Partition(std::vector<int> order, int revealed_count);

  std::span<const int> order() const { return order_; }
  std::span<const int> revealed() const { return std::span(order_).first(static_cast<std::size_t>(revealed_count_)); }
  std::span<const int> hidden() const { return std::span(order_).subspan(static_cast<std::size_t>(revealed_count_)); }
  int revealed_count() const { return revealed_count_; }
  int num_labels() const { return static_cast<int>(order_.size()); }
  int rho() const { return order_.back(); }
  bool is_revealed(int label) const { return revealed_mask_[static_cast<std::size_t>(label)] != 0; }
  bool fully_revealed() const { return revealed_count_ == num_labels(); }

 private:
  std::vector<int> order_;
  int revealed_count_;
  std::vector<char> revealed_mask_;
};

Partition init_partition(int num_labels, const Schedule& schedule);

/// Moves the next min(m, |U|) labels from U to S.
Partition reveal(const Partition& partition, int m);

/// The label trained on: the GT label if revealed, otherwise rho.
inline int effective_label(int label, const Partition& partition) {
  return partition.is_revealed(label) ? label : partition.rho();
}

/// Exactly `n` entries from `pool`: a uniform subset without replacement when the
/// pool is large enough, otherwise the whole pool topped up with uniform duplicates.
std::vector<Index> resample_uniform(std::vector<Index> pool, std::size_t n, Rng& rng);

/// Balanced mini-batch. The first `revealed_entries` entries come from S, the rest from U.
struct BalancedBatch {
  std::vector<Index> indices;
  std::vector<int> targets;
  Index revealed_entries = 0;
};

/// Resamples the U portion of a raw batch to match its S count:
/// subsampled without replacement when larger, topped up with uniform
/// duplicates when smaller, drawn from U globally when the raw batch has none.
/// With no S samples the raw batch is returned with rho targets; with U empty
/// the raw batch is returned unchanged.
BalancedBatch balance_batch(std::span<const Index> raw, const LabelIndex& index, const Partition& partition,
                            Rng& rng);

/// ceil((L - b) / m) + 1 intervals: one per reveal plus a final full-label interval.
int il_intervals(int num_labels, const Schedule& schedule);
inline int il_epochs(int num_labels, const Schedule& schedule) {
  return il_intervals(num_labels, schedule) * schedule.interval_epochs;
}

using Balancer = std::function<BalancedBatch(std::span<const Index>, const LabelIndex&, const Partition&, Rng&)>;

struct IlEpoch {
  int epoch = 0;  // within the IL phase
  int revealed = 0;
  double lr = 0;
  EpochStats stats;
};

struct IlOptions {
  Index batch_size = 128;
  double ls_alpha = 0;  // label smoothing applied to every IL target
  Balancer balancer = balance_batch;
  std::function<void(const IlEpoch&)> on_epoch;
  std::function<void(const BalancedBatch&, const Partition&)> on_batch;
};

struct IlOutcome {
  int epochs = 0;
  Partition partition;
};

/// Runs the full IL phase: intervals of E epochs at the interval learning rate,
/// revealing m labels after each, then one final interval with every label revealed.
/// Each epoch draws ceil(N / batch_size) uniform-label-prior batches and balances them.
IlOutcome run_il(Trainee& trainee, const Dataset& train, const Schedule& schedule, const IlOptions& options,
                 Rng& rng);

}  // namespace lilac
