#pragma once

// Adaptive compensation: samples the previous epoch's model misclassified are
// trained against a smoothed target that keeps its peak on the GT label.

#include <cstdint>
#include <vector>

#include "lilac/data.hpp"
#include "lilac/training.hpp"

namespace lilac {

struct ACConfig {
  double epsilon = 0.5;
  int threshold = 0;  // first post-IL epoch that applies compensation

  /// Requires epsilon in (1/L, 1] so the GT entry stays the argmax.
  void validate(int num_labels) const;
};

/// ((eps*L - 1)/(L - 1)) * onehot(y) + ((1 - eps)/(L - 1)) * ones.
/// The GT entry equals eps; every other entry (1 - eps)/(L - 1).
TargetVector ac_target(int label, int num_labels, double epsilon);
void fill_ac_target(int label, int num_labels, double epsilon, Eigen::Ref<RowVector> row);

struct MisclassMask {
  std::vector<std::uint8_t> flags;
  int epoch = -1;  // epoch of the snapshot that produced it

  Index count() const;
  bool operator[](Index i) const { return flags[static_cast<std::size_t>(i)] != 0; }
};

/// flags[i] = argmax(snapshot(x_i)) != y_i, ties to the lowest index.
MisclassMask mark_misclassified(const ModelSnapshot<double>& snapshot, const Dataset& data);

struct AcEpochResult {
  EpochStats stats;
  MisclassMask mask;
  ModelSnapshot<double> next;  // post-epoch model, consulted by the following epoch
};

/// One compensated epoch over a shuffled pass. The mask is computed once from
/// `previous`; masked samples use ac_target, the rest the LS target with
/// `base_alpha` (one-hot when zero). `epoch` is on the post-IL timeline.
AcEpochResult ac_epoch(Trainee& trainee, const ModelSnapshot<double>& previous, const Dataset& train,
                       const ACConfig& cfg, double lr, int epoch, Index batch_size, double base_alpha, Rng& rng);

}  // namespace lilac
