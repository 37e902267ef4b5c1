#include "lilac/training.hpp"

namespace lilac {

StepResult train_step(Trainee& trainee, double lr, const Dataset& data, std::span<const Index> indices,
                      const Matrix& targets, std::span<const int> target_labels) {
  const Matrix inputs = gather_rows(data.features, indices);
  auto result = backward(trainee.model, inputs, targets);
  if (!std::isfinite(result.loss)) throw NumericError("training loss became non-finite");
  sgd_step(trainee.model, result.grads, trainee.hyper, lr, trainee.sgd);

  StepResult step;
  step.loss = result.loss;
  step.size = static_cast<Index>(indices.size());
  const auto predicted = argmax_rows(result.logits);
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] == target_labels[i]) ++step.correct;
  return step;
}

void fill_ls_target(int label, int num_labels, double alpha, Eigen::Ref<RowVector> row) {
  const double off = alpha / num_labels;
  row.setConstant(off);
  row[label] = 1.0 - alpha + off;
}

Matrix make_targets(std::span<const int> labels, int num_labels, double alpha) {
  Matrix targets(static_cast<Index>(labels.size()), num_labels);
  for (std::size_t i = 0; i < labels.size(); ++i)
    fill_ls_target(labels[i], num_labels, alpha, targets.row(static_cast<Index>(i)));
  return targets;
}

EpochStats plain_epoch(Trainee& trainee, double lr, const Dataset& train, Index batch_size, double alpha,
                       Rng& rng) {
  EpochMeter meter;
  for (const auto& batch : shuffled_batches(train.size(), batch_size, rng)) {
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (Index i : batch) labels.push_back(train.labels[static_cast<std::size_t>(i)]);
    meter.add(train_step(trainee, lr, train, batch, make_targets(labels, train.num_labels, alpha), labels));
  }
  return meter.finish();
}

}  // namespace lilac
