#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "lilac/nn.hpp"

namespace lilac {

enum class Split { train, test };

/// Flattened samples (one row each, pixel data scaled to [0, 1]) with integer labels.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_labels = 0;
  Split split = Split::train;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  /// Throws DataError unless every label lies in [0, num_labels) and row counts agree.
  void validate() const;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// CIFAR binary archives: per record `label_bytes` label bytes followed by
// 3072 channel-planar pixel bytes. The last label byte is the one used.
inline constexpr Index kCifarPixels = 3072;

/// Parses an in-memory CIFAR binary buffer. `source` names the buffer in error messages.
Dataset parse_cifar(std::span<const std::uint8_t> bytes, int label_bytes, int num_labels, Split split,
                    std::string_view source = "<memory>");

/// Reads data_batch_{1..5}.bin and test_batch.bin from `dir`.
DatasetPair load_cifar10(const std::filesystem::path& dir);
/// Reads train.bin and test.bin from `dir`; fine labels.
DatasetPair load_cifar100(const std::filesystem::path& dir);

struct BlobSpec {
  int classes = 8;
  int per_class = 250;
  int dim = 16;
  double separation = 6.0;
  std::uint64_t seed = 0;
};

/// Gaussian class blobs centred at separation * u_c, u_c orthonormal when
/// classes <= dim (random unit vectors otherwise). Stratified 80/20 split.
DatasetPair make_blobs(const BlobSpec& spec);

// Flat binary: N, D, L as int64 LE, N int64 labels, then N*D float64 features row-major.
void write_flat(const Dataset& data, const std::filesystem::path& path);
Dataset read_flat(const std::filesystem::path& path, Split split = Split::train);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

Matrix gather_rows(const Matrix& source, std::span<const Index> rows);

/// Per-label membership lists over a dataset's labels.
class LabelIndex {
 public:
  explicit LabelIndex(const Dataset& data);

  int num_labels() const { return static_cast<int>(members_.size()); }
  int label_of(Index sample) const { return labels_[static_cast<std::size_t>(sample)]; }
  std::span<const Index> members(int label) const { return members_[static_cast<std::size_t>(label)]; }
  Index size() const { return static_cast<Index>(labels_.size()); }

 private:
  std::vector<int> labels_;
  std::vector<std::vector<Index>> members_;
};

/// Two-stage draw: label uniformly over all L labels, then a member of that
/// label uniformly. Throws DataError if any label has no samples.
std::vector<Index> sample_batch(const LabelIndex& index, Index batch_size, Rng& rng);

/// A shuffled pass over [0, n) split into consecutive batches; the last may be short.
std::vector<std::vector<Index>> shuffled_batches(Index n, Index batch_size, Rng& rng);

/// Uniform integer in [0, n).
inline Index uniform_index(Index n, Rng& rng) {
  return std::uniform_int_distribution<Index>(0, n - 1)(rng);
}

}  // namespace lilac
