#include "lilac/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace lilac {

double accuracy(const Model& model, const Dataset& data) {
  if (model.output_dim() != data.num_labels) throw DimensionError("accuracy: output width != label count");
  if (data.size() == 0) return 0.0;
  const auto predicted = predict(model, data.features);
  Index correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == data.labels[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

FeatureMatrix extract_features(const Model& model, const Dataset& data) {
  if (model.depth() < 2) throw DimensionError("extract_features: model has no hidden layer");
  FeatureMatrix out;
  out.labels = data.labels;
  out.num_labels = data.num_labels;
  out.split = data.split;
  out.features.resize(data.size(), model.layers()[model.depth() - 2].fan_out());
  constexpr Index chunk = 4096;
  for (Index start = 0; start < data.size(); start += chunk) {
    const Index n = std::min(chunk, data.size() - start);
    out.features.middleRows(start, n) = forward_through(model, data.features.middleRows(start, n), model.depth() - 1);
  }
  return out;
}

double linear_probe(const Matrix& train_features, std::span<const int> train_labels, const Matrix& test_features,
                    std::span<const int> test_labels, std::uint64_t seed, const ProbeRecipe& recipe) {
  if (train_features.rows() != static_cast<Index>(train_labels.size()) ||
      test_features.rows() != static_cast<Index>(test_labels.size()))
    throw DimensionError("linear_probe: label count does not match feature rows");
  if (train_features.cols() != test_features.cols())
    throw DimensionError("linear_probe: train and test feature widths differ");
  if (train_labels.empty()) throw ConfigError("linear_probe: empty training set");

  int classes = 0;
  for (int y : train_labels) classes = std::max(classes, y + 1);
  for (int y : test_labels) classes = std::max(classes, y + 1);
  if (std::all_of(train_labels.begin(), train_labels.end(), [&](int y) { return y == train_labels[0]; }))
    throw ConfigError("linear_probe: training labels contain a single class");

  const Index dim = train_features.cols();
  Matrix weights = Matrix::Zero(dim, classes);
  RowVector bias = RowVector::Zero(classes);
  Rng rng(seed);
  std::vector<Index> order(train_labels.size());
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index i : order) {
      const auto x = train_features.row(i);
      const int y = train_labels[static_cast<std::size_t>(i)];
      const RowVector scores = x * weights + bias;
      int rival = -1;
      for (int c = 0; c < classes; ++c)
        if (c != y && (rival < 0 || scores[c] > scores[rival])) rival = c;
      weights *= 1.0 - recipe.lr * recipe.weight_decay;
      if (1.0 + scores[rival] - scores[y] > 0) {
        weights.col(y) += recipe.lr * x.transpose();
        weights.col(rival) -= recipe.lr * x.transpose();
        bias[y] += recipe.lr;
        bias[rival] -= recipe.lr;
      }
    }
  }

  if (test_labels.empty()) return 0.0;
  const Matrix scores = (test_features * weights).rowwise() + bias;
  const auto predicted = argmax_rows(scores);
  Index correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == test_labels[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test_labels.size());
}

namespace {

double assign_points(const Matrix& points, const Matrix& centroids, std::vector<int>& labels,
                     std::vector<double>& distances) {
  double total = 0;
  for (Index i = 0; i < points.rows(); ++i) {
    Index best = 0;
    double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
    for (Index c = 1; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    distances[static_cast<std::size_t>(i)] = best_d;
    total += best_d;
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iters) {
  const Index n = points.rows();
  if (k < 1 || k > n) throw ConfigError("kmeans: need 1 <= k <= N");
  if (max_iters < 1) throw ConfigError("kmeans: max_iters must be >= 1");
  Rng rng(seed);

  // k-means++ seeding.
  Matrix centroids(k, points.cols());
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  Index first = uniform_index(n, rng);
  centroids.row(0) = points.row(first);
  taken[static_cast<std::size_t>(first)] = 1;
  std::vector<double> nearest(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nearest[static_cast<std::size_t>(i)] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double mass = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    Index pick = -1;
    if (mass > 0) {
      double r = std::uniform_real_distribution<double>(0.0, mass)(rng);
      for (Index i = 0; i < n; ++i) {
        r -= nearest[static_cast<std::size_t>(i)];
        if (r <= 0 && nearest[static_cast<std::size_t>(i)] > 0) {
          pick = i;
          break;
        }
      }
      if (pick < 0)
        for (Index i = n; i-- > 0;)
          if (nearest[static_cast<std::size_t>(i)] > 0) {
            pick = i;
            break;
          }
    } else {
      // Every remaining point coincides with a centroid.
      for (Index i = 0; i < n && pick < 0; ++i)
        if (!taken[static_cast<std::size_t>(i)]) pick = i;
    }
    taken[static_cast<std::size_t>(pick)] = 1;
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i)
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)], (points.row(i) - centroids.row(c)).squaredNorm());
  }

  KMeansResult result;
  result.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> distances(static_cast<std::size_t>(n));
  std::vector<int> previous;
  for (int iter = 0; iter < max_iters; ++iter) {
    previous = result.labels;
    result.objective.push_back(assign_points(points, centroids, result.labels, distances));
    result.iterations = iter + 1;
    if (result.labels == previous) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const int c = result.labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      const auto far = std::max_element(distances.begin(), distances.end()) - distances.begin();
      centroids.row(c) = points.row(far);
      distances[static_cast<std::size_t>(far)] = 0;
    }
  }
  result.centroids = std::move(centroids);
  return result;
}

Assignment hungarian(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian: cost matrix must be square");
  if (!cost.allFinite()) throw NumericError("hungarian: non-finite cost");
  const int n = static_cast<int>(cost.rows());
  Assignment result;
  if (n == 0) return result;

  // Shortest augmenting paths with row/column potentials. Rows and columns are
  // 1-based; column 0 is the sentinel holding the row being inserted.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int row0 = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(row0 - 1, j - 1) - u[row0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  result.column_of_row.assign(n, -1);
  for (int j = 1; j <= n; ++j) result.column_of_row[match[j] - 1] = j - 1;
  for (int r = 0; r < n; ++r) result.cost += cost(r, result.column_of_row[r]);
  return result;
}

double cluster_accuracy(std::span<const int> clusters, std::span<const int> labels, int k) {
  if (clusters.size() != labels.size()) throw DimensionError("cluster_accuracy: length mismatch");
  if (clusters.empty()) return 0.0;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(k, k);
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] < 0 || clusters[i] >= k || labels[i] < 0 || labels[i] >= k)
      throw DimensionError("cluster_accuracy: index outside [0, k)");
    counts(clusters[i], labels[i]) += 1;
  }
  const Assignment match = hungarian(-counts);
  return 100.0 * (-match.cost) / static_cast<double>(clusters.size());
}

}  // namespace lilac
