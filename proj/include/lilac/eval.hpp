#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lilac/data.hpp"

namespace lilac {

/// 100 * fraction of argmax predictions equal to the label (ties to lowest index).
double accuracy(const Model& model, const Dataset& data);

/// Penultimate-layer activations with the source labels; shares the flat file format.
using FeatureMatrix = Dataset;

/// Activations after the last hidden layer's nonlinearity. Needs depth >= 2.
FeatureMatrix extract_features(const Model& model, const Dataset& data);

struct ProbeRecipe {
  int epochs = 50;
  double lr = 0.01;
  double weight_decay = 1e-4;
};

/// Linear classifier trained with per-sample SGD on the multiclass hinge loss
/// max(0, 1 + max_{j != y} s_j - s_y); returns test accuracy in percent.
double linear_probe(const Matrix& train_features, std::span<const int> train_labels, const Matrix& test_features,
                    std::span<const int> test_labels, std::uint64_t seed, const ProbeRecipe& recipe = {});

struct KMeansResult {
  std::vector<int> labels;
  Matrix centroids;
  std::vector<double> objective;  // sum of squared distances after each assignment step
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Stops at an assignment fixpoint or
/// after `max_iters`. An emptied cluster is reseeded at the farthest point.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters = 100);

struct Assignment {
  std::vector<int> column_of_row;  // cluster index -> label index
  double cost = 0;
};

/// Minimum-cost perfect matching on a square cost matrix (Kuhn-Munkres).
Assignment hungarian(const Eigen::MatrixXd& cost);

/// Best one-to-one cluster-to-label accuracy in percent over the k x k contingency table.
double cluster_accuracy(std::span<const int> clusters, std::span<const int> labels, int k);

}  // namespace lilac
