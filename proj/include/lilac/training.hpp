#pragma once

#include <span>
#include <vector>

#include "lilac/data.hpp"
#include "lilac/nn.hpp"

namespace lilac {

/// Parameters plus the optimizer state that travels with them across phases.
struct Trainee {
  Model model;
  OptimHyper hyper;
  SgdState<double> sgd;
};

struct StepResult {
  double loss = 0;
  Index correct = 0;  // argmax(logits) == target label
  Index size = 0;
};

/// One SGD step on the rows `indices` of `data` against the given target rows.
/// `target_labels` are the labels the targets peak at, used for train accuracy.
StepResult train_step(Trainee& trainee, double lr, const Dataset& data, std::span<const Index> indices,
                      const Matrix& targets, std::span<const int> target_labels);

struct EpochStats {
  double loss = 0;      // mean of per-batch losses
  double accuracy = 0;  // percent of trained entries whose prediction matched the target label
  Index samples = 0;
  Index batches = 0;
  Index smoothed = 0;  // entries trained with an adaptive-compensation target
};

class EpochMeter {
 public:
  void add(const StepResult& step) {
    loss_sum_ += step.loss;
    correct_ += step.correct;
    samples_ += step.size;
    ++batches_;
  }
  EpochStats finish(Index smoothed = 0) const {
    EpochStats s;
    s.batches = batches_;
    s.samples = samples_;
    s.loss = batches_ ? loss_sum_ / static_cast<double>(batches_) : 0.0;
    s.accuracy = samples_ ? 100.0 * static_cast<double>(correct_) / static_cast<double>(samples_) : 0.0;
    s.smoothed = smoothed;
    return s;
  }

 private:
  double loss_sum_ = 0;
  Index correct_ = 0, samples_ = 0, batches_ = 0;
};

/// Label-smoothing target (1 - alpha) * onehot(y) + alpha / L; alpha == 0 gives an exact one-hot.
void fill_ls_target(int label, int num_labels, double alpha, Eigen::Ref<RowVector> row);

/// Target rows for `labels` under label smoothing `alpha`.
Matrix make_targets(std::span<const int> labels, int num_labels, double alpha);

/// A conventional epoch: shuffled pass over the training set, GT targets smoothed by `alpha`.
EpochStats plain_epoch(Trainee& trainee, double lr, const Dataset& train, Index batch_size, double alpha,
                       Rng& rng);

}  // namespace lilac
