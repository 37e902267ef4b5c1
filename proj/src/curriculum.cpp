#include "lilac/curriculum.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace lilac {

void Schedule::validate(int num_labels) const {
  if (initial < 1 || initial > num_labels)
    throw ConfigError("b must lie in [1, " + std::to_string(num_labels) + "], got " + std::to_string(initial));
  if (step < 1) throw ConfigError("m must be >= 1");
  if (interval_epochs < 1) throw ConfigError("E must be >= 1");
  if (!(interval_lr > 0)) throw ConfigError("interval_lr must be > 0");
}

Partition::Partition(std::vector<int> order, int revealed_count)
    : order_(std::move(order)), revealed_count_(revealed_count), revealed_mask_(order_.size(), 0) {
  if (order_.empty()) throw ConfigError("partition needs at least one label");
  if (revealed_count_ < 0 || revealed_count_ > num_labels()) throw ConfigError("revealed count out of range");
  std::vector<char> seen(order_.size(), 0);
  for (int y : order_) {
    if (y < 0 || y >= num_labels() || seen[static_cast<std::size_t>(y)])
      throw ConfigError("label order must be a permutation of [0, L)");
    seen[static_cast<std::size_t>(y)] = 1;
  }
  for (int y : revealed()) revealed_mask_[static_cast<std::size_t>(y)] = 1;
}

Partition init_partition(int num_labels, const Schedule& schedule) {
  if (schedule.initial > num_labels)
    throw ConfigError("b = " + std::to_string(schedule.initial) + " exceeds L = " + std::to_string(num_labels));
  schedule.validate(num_labels);
  std::vector<int> order(static_cast<std::size_t>(num_labels));
  std::iota(order.begin(), order.end(), 0);
  if (schedule.order == LabelOrder::random) {
    Rng rng(schedule.order_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  return Partition(std::move(order), schedule.initial);
}

Partition reveal(const Partition& partition, int m) {
  const int count = std::min(partition.num_labels(), partition.revealed_count() + std::max(m, 0));
  return Partition(std::vector<int>(partition.order().begin(), partition.order().end()), count);
}

namespace {

// Uniform label prior over U, then a uniform member of that label.
Index draw_hidden(const LabelIndex& index, const Partition& partition, Rng& rng) {
  const auto hidden = partition.hidden();
  for (;;) {
    const int label = hidden[static_cast<std::size_t>(uniform_index(static_cast<Index>(hidden.size()), rng))];
    const auto members = index.members(label);
    if (!members.empty()) return members[static_cast<std::size_t>(uniform_index(static_cast<Index>(members.size()), rng))];
    bool any = false;
    for (int y : hidden) any = any || !index.members(y).empty();
    if (!any) throw DataError("hidden labels have no samples");
  }
}

}  // namespace

std::vector<Index> resample_uniform(std::vector<Index> pool, std::size_t n, Rng& rng) {
  if (pool.empty()) throw DataError("cannot resample from an empty pool");
  if (pool.size() >= n) {
    // Partial Fisher-Yates: the first n entries become a uniform subset.
    for (std::size_t k = 0; k < n; ++k) {
      const auto j = k + static_cast<std::size_t>(uniform_index(static_cast<Index>(pool.size() - k), rng));
      std::swap(pool[k], pool[j]);
    }
    pool.resize(n);
    return pool;
  }
  const auto originals = static_cast<Index>(pool.size());
  while (pool.size() < n) pool.push_back(pool[static_cast<std::size_t>(uniform_index(originals, rng))]);
  return pool;
}

BalancedBatch balance_batch(std::span<const Index> raw, const LabelIndex& index, const Partition& partition,
                            Rng& rng) {
  BalancedBatch out;
  if (partition.fully_revealed()) {
    out.indices.assign(raw.begin(), raw.end());
    for (Index i : raw) out.targets.push_back(index.label_of(i));
    out.revealed_entries = static_cast<Index>(raw.size());
    return out;
  }

  std::vector<Index> from_s, from_u;
  for (Index i : raw) (partition.is_revealed(index.label_of(i)) ? from_s : from_u).push_back(i);
  const auto n_s = from_s.size();

  if (n_s == 0) {
    out.indices.assign(raw.begin(), raw.end());
    out.targets.assign(raw.size(), partition.rho());
    return out;
  }

  std::vector<Index> chosen;
  if (from_u.empty()) {
    for (std::size_t k = 0; k < n_s; ++k) chosen.push_back(draw_hidden(index, partition, rng));
  } else {
    chosen = resample_uniform(std::move(from_u), n_s, rng);
  }

  out.indices = std::move(from_s);
  for (Index i : out.indices) out.targets.push_back(index.label_of(i));
  out.revealed_entries = static_cast<Index>(n_s);
  for (Index i : chosen) {
    out.indices.push_back(i);
    out.targets.push_back(partition.rho());
  }
  return out;
}

int il_intervals(int num_labels, const Schedule& schedule) {
  schedule.validate(num_labels);
  const int remaining = num_labels - schedule.initial;
  return (remaining + schedule.step - 1) / schedule.step + 1;
}

IlOutcome run_il(Trainee& trainee, const Dataset& train, const Schedule& schedule, const IlOptions& options,
                 Rng& rng) {
  if (trainee.model.output_dim() != train.num_labels)
    throw DimensionError("model output width does not match label count");
  if (options.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  const LabelIndex index(train);
  const int intervals = il_intervals(train.num_labels, schedule);
  const Index batches_per_epoch = (train.size() + options.batch_size - 1) / options.batch_size;

  Partition partition = init_partition(train.num_labels, schedule);
  int epoch = 0;
  for (int interval = 0; interval < intervals; ++interval) {
    for (int e = 0; e < schedule.interval_epochs; ++e, ++epoch) {
      EpochMeter meter;
      for (Index b = 0; b < batches_per_epoch; ++b) {
        const auto raw = sample_batch(index, options.batch_size, rng);
        const auto batch = options.balancer(raw, index, partition, rng);
        if (options.on_batch) options.on_batch(batch, partition);
        const Matrix targets = make_targets(batch.targets, train.num_labels, options.ls_alpha);
        meter.add(train_step(trainee, schedule.interval_lr, train, batch.indices, targets, batch.targets));
      }
      if (options.on_epoch)
        options.on_epoch(IlEpoch{epoch, partition.revealed_count(), schedule.interval_lr, meter.finish()});
    }
    partition = reveal(partition, schedule.step);
  }
  return IlOutcome{epoch, partition};
}

}  // namespace lilac
