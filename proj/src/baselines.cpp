#include "lilac/baselines.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <string>

#include "lilac/eval.hpp"

namespace lilac {

namespace {

constexpr std::array kVariants = {VariantKind::batch,   VariantKind::label_smoothing, VariantKind::dbs,
                                  VariantKind::ra,      VariantKind::only_il,         VariantKind::only_ac,
                                  VariantKind::lilac,   VariantKind::ls_lilac};

}  // namespace

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::batch: return "batch";
    case VariantKind::label_smoothing: return "label_smoothing";
    case VariantKind::dbs: return "dbs";
    case VariantKind::ra: return "ra";
    case VariantKind::only_il: return "only_il";
    case VariantKind::only_ac: return "only_ac";
    case VariantKind::lilac: return "lilac";
    case VariantKind::ls_lilac: return "ls_lilac";
  }
  return "?";
}

VariantKind parse_variant(std::string_view name) {
  for (auto kind : kVariants)
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::span<const VariantKind> all_variants() { return kVariants; }

bool uses_il(VariantKind kind) {
  return kind == VariantKind::lilac || kind == VariantKind::ls_lilac || kind == VariantKind::only_il ||
         kind == VariantKind::ra;
}
bool uses_window(VariantKind kind) { return uses_il(kind) || kind == VariantKind::dbs; }
bool uses_ac(VariantKind kind) {
  return kind == VariantKind::lilac || kind == VariantKind::ls_lilac || kind == VariantKind::only_ac;
}
bool uses_ls(VariantKind kind) { return kind == VariantKind::label_smoothing || kind == VariantKind::ls_lilac; }

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::il: return "IL";
    case Phase::standard: return "standard";
    case Phase::ac: return "AC";
  }
  return "?";
}

TargetVector ls_target(int label, int num_labels, double alpha) {
  if (!(alpha >= 0 && alpha < 1)) throw ConfigError("label smoothing alpha must lie in [0, 1)");
  if (label < 0 || label >= num_labels) throw DimensionError("ls_target: label out of range");
  RowVector row(num_labels);
  fill_ls_target(label, num_labels, alpha, row);
  return TargetVector(row.transpose());
}

// ---------------------------------------------------------------------------
// Dynamic batch size

BatchSizeDistribution::BatchSizeDistribution(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw ConfigError("batch size distribution is empty");
}

BatchSizeDistribution BatchSizeDistribution::from_dry_run(const Dataset& train, const Schedule& schedule,
                                                          Index batch_size, Rng& rng) {
  const LabelIndex index(train);
  const int intervals = il_intervals(train.num_labels, schedule);
  const Index batches_per_epoch = (train.size() + batch_size - 1) / batch_size;
  Partition partition = init_partition(train.num_labels, schedule);
  std::vector<Index> sizes;
  for (int interval = 0; interval < intervals; ++interval) {
    for (int e = 0; e < schedule.interval_epochs; ++e)
      for (Index b = 0; b < batches_per_epoch; ++b) {
        const auto raw = sample_batch(index, batch_size, rng);
        sizes.push_back(static_cast<Index>(balance_batch(raw, index, partition, rng).indices.size()));
      }
    partition = reveal(partition, schedule.step);
  }
  return BatchSizeDistribution(std::move(sizes));
}

Index BatchSizeDistribution::draw(Rng& rng) const {
  return sizes_[static_cast<std::size_t>(uniform_index(static_cast<Index>(sizes_.size()), rng))];
}

std::vector<Index> dbs_batch(std::span<const Index> raw, Index target_size, Rng& rng) {
  if (raw.empty()) throw ConfigError("dbs_batch: empty raw batch");
  if (target_size < 1) throw ConfigError("dbs_batch: target size must be >= 1");
  std::vector<Index> out(raw.begin(), raw.end());
  if (static_cast<std::size_t>(target_size) == raw.size()) return out;
  return resample_uniform(std::move(out), static_cast<std::size_t>(target_size), rng);
}

// ---------------------------------------------------------------------------
// Random augmentation

BalancedBatch ra_balance(std::span<const Index> raw, const LabelIndex& index, const Partition& partition, Rng& rng) {
  if (partition.fully_revealed()) return balance_batch(raw, index, partition, rng);

  std::vector<Index> from_s, from_u;
  for (Index i : raw) (partition.is_revealed(index.label_of(i)) ? from_s : from_u).push_back(i);
  if (from_s.empty()) return balance_batch(raw, index, partition, rng);
  const auto n_s = from_s.size();

  std::vector<Index> chosen;
  const std::set<int> present = [&] {
    std::set<int> labels;
    for (Index i : from_u) labels.insert(index.label_of(i));
    return labels;
  }();
  if (!present.empty()) {
    auto it = present.begin();
    std::advance(it, uniform_index(static_cast<Index>(present.size()), rng));
    std::vector<Index> pool;
    for (Index i : from_u)
      if (index.label_of(i) == *it) pool.push_back(i);
    chosen = resample_uniform(std::move(pool), n_s, rng);
  } else {
    std::vector<int> candidates;
    for (int y : partition.hidden())
      if (!index.members(y).empty()) candidates.push_back(y);
    if (candidates.empty()) throw DataError("hidden labels have no samples");
    const int label = candidates[static_cast<std::size_t>(uniform_index(static_cast<Index>(candidates.size()), rng))];
    const auto members = index.members(label);
    for (std::size_t k = 0; k < n_s; ++k)
      chosen.push_back(members[static_cast<std::size_t>(uniform_index(static_cast<Index>(members.size()), rng))]);
  }

  BalancedBatch out;
  out.indices = std::move(from_s);
  for (Index i : out.indices) out.targets.push_back(index.label_of(i));
  out.revealed_entries = static_cast<Index>(n_s);
  for (Index i : chosen) {
    out.indices.push_back(i);
    out.targets.push_back(partition.rho());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variant runner

void TrainConfig::validate(VariantKind kind, int num_labels) const {
  optim.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  for (Index h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be positive");
  if (probe_every < 0) throw ConfigError("probe_every must be >= 0");
  if (kmeans_iters < 1) throw ConfigError("kmeans_iters must be >= 1");
  if (num_labels < 2) throw ConfigError("need at least 2 labels");
  if (uses_window(kind)) schedule.validate(num_labels);
  if (uses_ac(kind)) {
    ac.validate(num_labels);
    if (ac.threshold >= epochs)
      throw ConfigError("T = " + std::to_string(ac.threshold) + " must be below the post-IL epoch count " +
                        std::to_string(epochs));
  }
  if (uses_ls(kind) && !(ls_alpha >= 0 && ls_alpha < 1)) throw ConfigError("ls_alpha must lie in [0, 1)");
}

namespace {

struct Recorder {
  const DatasetPair& data;
  const TrainConfig& config;
  const Trainee& trainee;
  std::uint64_t probe_seed;
  TrialReport& report;

  void operator()(Phase phase, int revealed, double lr, const EpochStats& stats, std::optional<Index> ac_modified) {
    EpochRecord row;
    row.epoch = static_cast<int>(report.rows.size());
    row.phase = phase;
    row.revealed = revealed;
    row.lr = lr;
    row.train_loss = stats.loss;
    row.train_acc = stats.accuracy;
    row.test_acc = accuracy(trainee.model, data.test);
    row.ac_modified = ac_modified;
    if (config.probe_every > 0 && (row.epoch + 1) % config.probe_every == 0 && trainee.model.depth() >= 2 &&
        data.test.size() >= data.test.num_labels) {
      const std::uint64_t seed = probe_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(row.epoch + 1);
      const auto train_features = extract_features(trainee.model, data.train);
      const auto test_features = extract_features(trainee.model, data.test);
      row.probe_acc = linear_probe(train_features.features, train_features.labels, test_features.features,
                                   test_features.labels, seed);
      const auto clusters = kmeans(test_features.features, data.test.num_labels, seed, config.kmeans_iters);
      row.cluster_acc = cluster_accuracy(clusters.labels, data.test.labels, data.test.num_labels);
    }
    report.rows.push_back(row);
  }
};

}  // namespace

TrialReport run_variant(VariantKind kind, const DatasetPair& data, const TrainConfig& config, Rng& rng,
                        std::uint64_t probe_seed, const TrialHooks& hooks) {
  const Dataset& train = data.train;
  const int num_labels = train.num_labels;
  if (data.test.num_labels != num_labels) throw DataError("train and test label counts differ");
  if (data.test.dim() != train.dim()) throw DataError("train and test feature widths differ");
  config.validate(kind, num_labels);

  std::vector<Index> widths{train.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(num_labels);
  Trainee trainee{Model::glorot(widths, rng), config.optim, {}};

  TrialReport report;
  report.kind = kind;
  Recorder record{data, config, trainee, probe_seed, report};
  const double alpha = uses_ls(kind) ? config.ls_alpha : 0.0;
  const Schedule& schedule = config.schedule;

  // With every label revealed from the start there is nothing to introduce and
  // the window is skipped, leaving plain batch learning.
  const bool window = uses_window(kind) && schedule.initial < num_labels;
  if (window && uses_il(kind)) {
    IlOptions options;
    options.batch_size = config.batch_size;
    options.ls_alpha = alpha;
    if (kind == VariantKind::ra) options.balancer = ra_balance;
    options.on_batch = hooks.on_il_batch;
    options.on_epoch = [&](const IlEpoch& e) { record(Phase::il, e.revealed, e.lr, e.stats, std::nullopt); };
    report.window_epochs = run_il(trainee, train, schedule, options, rng).epochs;
  } else if (window) {
    Rng dry_rng(rng());
    const auto sizes = BatchSizeDistribution::from_dry_run(train, schedule, config.batch_size, dry_rng);
    const LabelIndex index(train);
    const Index batches_per_epoch = (train.size() + config.batch_size - 1) / config.batch_size;
    const int epochs = il_epochs(num_labels, schedule);
    for (int e = 0; e < epochs; ++e) {
      EpochMeter meter;
      for (Index b = 0; b < batches_per_epoch; ++b) {
        const auto raw = sample_batch(index, config.batch_size, rng);
        const auto resized = dbs_batch(raw, sizes.draw(rng), rng);
        if (hooks.on_dbs_batch) hooks.on_dbs_batch(raw, resized);
        std::vector<int> labels;
        for (Index i : resized) labels.push_back(train.labels[static_cast<std::size_t>(i)]);
        meter.add(train_step(trainee, schedule.interval_lr, train, resized, make_targets(labels, num_labels, alpha),
                             labels));
      }
      record(Phase::il, num_labels, schedule.interval_lr, meter.finish(), std::nullopt);
    }
    report.window_epochs = epochs;
  }

  const bool compensate = uses_ac(kind);
  std::optional<ModelSnapshot<double>> previous;
  if (compensate && config.ac.threshold == 0) previous = snapshot(trainee.model, -1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = lr_at_epoch(config.optim, epoch);
    if (compensate && epoch >= config.ac.threshold) {
      auto result = ac_epoch(trainee, *previous, train, config.ac, lr, epoch, config.batch_size, alpha, rng);
      if (hooks.on_ac_mask) hooks.on_ac_mask(epoch, *previous, result.mask);
      record(Phase::ac, num_labels, lr, result.stats, result.stats.smoothed);
      previous = std::move(result.next);
      continue;
    }
    const auto stats = plain_epoch(trainee, lr, train, config.batch_size, alpha, rng);
    record(Phase::standard, num_labels, lr, stats, compensate ? std::optional<Index>(0) : std::nullopt);
    if (compensate && epoch + 1 == config.ac.threshold) previous = snapshot(trainee.model, epoch);
  }
  return report;
}

}  // namespace lilac
