#include "lilac/data.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

namespace lilac {

static_assert(std::endian::native == std::endian::little, "flat format assumes a little-endian host");

void Dataset::validate() const {
  if (static_cast<Index>(labels.size()) != features.rows())
    throw DataError("dataset has " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(features.rows()) + " rows");
  for (int y : labels)
    if (y < 0 || y >= num_labels)
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(num_labels) + ")");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("read failure on " + path.string());
  return bytes;
}

namespace {

Index cifar_record_count(std::size_t bytes, int label_bytes, std::string_view source) {
  const std::size_t record = static_cast<std::size_t>(label_bytes) + kCifarPixels;
  if (bytes % record != 0)
    throw DataError(std::string(source) + ": size " + std::to_string(bytes) + " is not a multiple of " +
                    std::to_string(record));
  return static_cast<Index>(bytes / record);
}

void append_cifar(std::span<const std::uint8_t> bytes, int label_bytes, std::string_view source,
                  Dataset& out, Index row) {
  const Index records = cifar_record_count(bytes.size(), label_bytes, source);
  const std::size_t record = static_cast<std::size_t>(label_bytes) + kCifarPixels;
  for (Index i = 0; i < records; ++i) {
    const std::uint8_t* rec = bytes.data() + static_cast<std::size_t>(i) * record;
    const int label = rec[label_bytes - 1];
    if (label >= out.num_labels)
      throw DataError(std::string(source) + ": record " + std::to_string(i) + " has corrupt label " +
                      std::to_string(label));
    out.labels[static_cast<std::size_t>(row + i)] = label;
    const std::uint8_t* px = rec + label_bytes;
    for (Index c = 0; c < kCifarPixels; ++c) out.features(row + i, c) = px[c] / 255.0;
  }
}

Dataset load_cifar_files(const std::vector<std::filesystem::path>& files, int label_bytes, int num_labels,
                         Split split) {
  std::vector<std::vector<std::uint8_t>> buffers;
  Index total = 0;
  for (const auto& f : files) {
    buffers.push_back(read_file(f));
    total += cifar_record_count(buffers.back().size(), label_bytes, f.string());
  }
  Dataset out;
  out.num_labels = num_labels;
  out.split = split;
  out.features.resize(total, kCifarPixels);
  out.labels.resize(static_cast<std::size_t>(total));
  Index row = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    append_cifar(buffers[i], label_bytes, files[i].string(), out, row);
    row += cifar_record_count(buffers[i].size(), label_bytes, files[i].string());
    buffers[i] = {};
  }
  return out;
}

}  // namespace

Dataset parse_cifar(std::span<const std::uint8_t> bytes, int label_bytes, int num_labels, Split split,
                    std::string_view source) {
  if (label_bytes < 1) throw ConfigError("label_bytes must be >= 1");
  Dataset out;
  out.num_labels = num_labels;
  out.split = split;
  const Index n = cifar_record_count(bytes.size(), label_bytes, source);
  out.features.resize(n, kCifarPixels);
  out.labels.resize(static_cast<std::size_t>(n));
  append_cifar(bytes, label_bytes, source, out, 0);
  return out;
}

DatasetPair load_cifar10(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> train_files;
  for (int i = 1; i <= 5; ++i) train_files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  DatasetPair pair;
  pair.train = load_cifar_files(train_files, 1, 10, Split::train);
  pair.test = load_cifar_files({dir / "test_batch.bin"}, 1, 10, Split::test);
  return pair;
}

DatasetPair load_cifar100(const std::filesystem::path& dir) {
  DatasetPair pair;
  pair.train = load_cifar_files({dir / "train.bin"}, 2, 100, Split::train);
  pair.test = load_cifar_files({dir / "test.bin"}, 2, 100, Split::test);
  return pair;
}

DatasetPair make_blobs(const BlobSpec& spec) {
  if (spec.dim < 1) throw ConfigError("blobs: dim must be >= 1");
  if (spec.classes < 2) throw ConfigError("blobs: need at least 2 classes");
  if (spec.per_class < 2) throw ConfigError("blobs: need at least 2 samples per class");
  if (!(spec.separation > 0)) throw ConfigError("blobs: separation must be > 0");

  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd frame(spec.dim, spec.classes);
  for (Index c = 0; c < frame.cols(); ++c)
    for (Index r = 0; r < frame.rows(); ++r) frame(r, c) = normal(rng);
  Eigen::MatrixXd directions;
  if (spec.classes <= spec.dim) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame);
    directions = qr.householderQ() * Eigen::MatrixXd::Identity(spec.dim, spec.classes);
  } else {
    directions = frame.colwise().normalized();
  }
  const Eigen::MatrixXd centres = spec.separation * directions;

  const int n_train = static_cast<int>(spec.per_class * 4 / 5);
  const int n_test = spec.per_class - n_train;
  DatasetPair pair;
  for (Dataset* d : {&pair.train, &pair.test}) d->num_labels = spec.classes;
  pair.train.split = Split::train;
  pair.test.split = Split::test;
  pair.train.features.resize(static_cast<Index>(spec.classes) * n_train, spec.dim);
  pair.test.features.resize(static_cast<Index>(spec.classes) * n_test, spec.dim);

  Index train_row = 0, test_row = 0;
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.per_class; ++i) {
      const bool to_train = i < n_train;
      Dataset& d = to_train ? pair.train : pair.test;
      Index& row = to_train ? train_row : test_row;
      for (Index k = 0; k < spec.dim; ++k) d.features(row, k) = centres(k, c) + normal(rng);
      d.labels.push_back(c);
      ++row;
    }
  }
  return pair;
}

namespace {

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& offset, const std::filesystem::path& path) {
  if (offset + sizeof(T) > bytes.size()) throw DataError(path.string() + ": truncated flat file");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

}  // namespace

void write_flat(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  put<std::int64_t>(out, data.size());
  put<std::int64_t>(out, data.dim());
  put<std::int64_t>(out, data.num_labels);
  for (int y : data.labels) put<std::int64_t>(out, y);
  out.write(reinterpret_cast<const char*>(data.features.data()),
            static_cast<std::streamsize>(data.features.size() * sizeof(double)));
  if (!out) throw DataError("write failure on " + path.string());
}

Dataset read_flat(const std::filesystem::path& path, Split split) {
  const auto bytes = read_file(path);
  std::size_t offset = 0;
  const auto n = take<std::int64_t>(bytes, offset, path);
  const auto d = take<std::int64_t>(bytes, offset, path);
  const auto l = take<std::int64_t>(bytes, offset, path);
  if (n < 0 || d < 0 || l < 1) throw DataError(path.string() + ": invalid header");
  const auto expected = 24 + static_cast<std::uint64_t>(n) * 8 + static_cast<std::uint64_t>(n * d) * 8;
  if (bytes.size() != expected)
    throw DataError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                    std::to_string(bytes.size()));
  Dataset out;
  out.split = split;
  out.num_labels = static_cast<int>(l);
  out.labels.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out.labels.push_back(static_cast<int>(take<std::int64_t>(bytes, offset, path)));
  out.features.resize(n, d);
  std::memcpy(out.features.data(), bytes.data() + offset, static_cast<std::size_t>(n * d) * sizeof(double));
  out.validate();
  return out;
}

Matrix gather_rows(const Matrix& source, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = source.row(rows[i]);
  return out;
}

LabelIndex::LabelIndex(const Dataset& data)
    : labels_(data.labels), members_(static_cast<std::size_t>(data.num_labels)) {
  data.validate();
  for (std::size_t i = 0; i < labels_.size(); ++i)
    members_[static_cast<std::size_t>(labels_[i])].push_back(static_cast<Index>(i));
}

std::vector<Index> sample_batch(const LabelIndex& index, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (batch_size > index.size()) throw ConfigError("batch_size exceeds dataset size");
  for (int y = 0; y < index.num_labels(); ++y)
    if (index.members(y).empty()) throw DataError("label " + std::to_string(y) + " has no samples");
  std::vector<Index> batch(static_cast<std::size_t>(batch_size));
  for (auto& slot : batch) {
    const auto members = index.members(static_cast<int>(uniform_index(index.num_labels(), rng)));
    slot = members[static_cast<std::size_t>(uniform_index(static_cast<Index>(members.size()), rng))];
  }
  return batch;
}

std::vector<std::vector<Index>> shuffled_batches(Index n, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace lilac
