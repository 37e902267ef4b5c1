#include "lilac/compensation.hpp"

#include <numeric>
#include <string>

namespace lilac {

void ACConfig::validate(int num_labels) const {
  if (!(epsilon <= 1.0 && epsilon * num_labels > 1.0))
    throw ConfigError("epsilon must lie in (1/L, 1], got " + std::to_string(epsilon));
  if (threshold < 0) throw ConfigError("T must be >= 0");
}

void fill_ac_target(int label, int num_labels, double epsilon, Eigen::Ref<RowVector> row) {
  if (num_labels < 2) throw ConfigError("adaptive compensation needs L >= 2");
  if (!(epsilon > 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in (0, 1]");
  const double denom = num_labels - 1;
  const double uniform = (1.0 - epsilon) / denom;
  const double peak = (epsilon * num_labels - 1.0) / denom;
  row.setConstant(uniform);
  row[label] = peak + uniform;
}

TargetVector ac_target(int label, int num_labels, double epsilon) {
  if (label < 0 || label >= num_labels) throw DimensionError("ac_target: label out of range");
  RowVector row(num_labels);
  fill_ac_target(label, num_labels, epsilon, row);
  return TargetVector(row.transpose());
}

Index MisclassMask::count() const {
  return std::accumulate(flags.begin(), flags.end(), Index{0}, [](Index acc, std::uint8_t f) { return acc + (f ? 1 : 0); });
}

MisclassMask mark_misclassified(const ModelSnapshot<double>& snapshot, const Dataset& data) {
  if (snapshot.model().output_dim() != data.num_labels)
    throw DimensionError("snapshot output width does not match label count");
  const auto predicted = predict(snapshot.model(), data.features);
  MisclassMask mask;
  mask.epoch = snapshot.epoch();
  mask.flags.resize(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) mask.flags[i] = predicted[i] != data.labels[i];
  return mask;
}

AcEpochResult ac_epoch(Trainee& trainee, const ModelSnapshot<double>& previous, const Dataset& train,
                       const ACConfig& cfg, double lr, int epoch, Index batch_size, double base_alpha, Rng& rng) {
  if (epoch < cfg.threshold)
    throw ConfigError("ac_epoch called at epoch " + std::to_string(epoch) + " before T = " +
                      std::to_string(cfg.threshold));
  MisclassMask mask = mark_misclassified(previous, train);

  EpochMeter meter;
  Index smoothed = 0;
  for (const auto& batch : shuffled_batches(train.size(), batch_size, rng)) {
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (Index i : batch) labels.push_back(train.labels[static_cast<std::size_t>(i)]);
    Matrix targets = make_targets(labels, train.num_labels, base_alpha);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      if (!mask[batch[r]]) continue;
      fill_ac_target(labels[r], train.num_labels, cfg.epsilon, targets.row(static_cast<Index>(r)));
      ++smoothed;
    }
    meter.add(train_step(trainee, lr, train, batch, targets, labels));
  }
  return AcEpochResult{meter.finish(smoothed), std::move(mask), snapshot(trainee.model, epoch)};
}

}  // namespace lilac
