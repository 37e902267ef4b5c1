#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lilac/baselines.hpp"

namespace lilac {

// ---------------------------------------------------------------------------
// Configuration: flat `key = value` text, `#` comments.

using KeyValues = std::map<std::string, std::string, std::less<>>;

KeyValues parse_key_values(std::istream& in, std::string_view source = "<config>");
KeyValues read_key_values(const std::filesystem::path& path);

struct DatasetSpec {
  std::string kind = "blobs";  // blobs | cifar10 | cifar100 | flat
  std::filesystem::path dir;
  std::filesystem::path train_file;
  std::filesystem::path test_file;
  BlobSpec blobs;
};

struct ExperimentConfig {
  DatasetSpec data;
  VariantKind variant = VariantKind::lilac;
  TrainConfig train;
  bool auto_initial = true;  // b = L / 2 unless configured
  int trials = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  int jobs = 1;

  /// Checks what can be checked before the dataset is loaded.
  void validate() const;
};

/// Every recognised key; unknown keys are rejected.
std::span<const std::string_view> config_keys();

/// Parses one `key = value` pair into `config`. Throws ConfigError on unknown
/// keys or unparsable values; no cross-field validation.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Builds a config from defaults overlaid with `values`. Throws ConfigError on
/// unknown keys or unparsable values.
ExperimentConfig make_config(const KeyValues& values);

DatasetPair load_dataset(const DatasetSpec& spec);

/// Resolves dataset-dependent defaults (b = L / 2) and validates against L.
TrainConfig resolve_train_config(const ExperimentConfig& config, int num_labels);

// ---------------------------------------------------------------------------
// Reporting

struct Aggregate {
  double mean = 0;
  double stddev = 0;  // sample (n - 1) estimator; 0 for a single value
  int count = 0;
  bool single = false;
};

Aggregate aggregate(std::span<const double> values);

inline constexpr std::string_view kMetricsHeader =
    "epoch,phase,revealed_labels,lr,train_loss,train_acc,test_acc,ac_modified_count,probe_acc,cluster_acc";

/// Shortest round-trip decimal form.
std::string format_number(double value);

void write_metrics_csv(std::ostream& out, const TrialReport& report);
void write_metrics_csv(const std::filesystem::path& path, const TrialReport& report);

struct AggregateReport {
  VariantKind variant = VariantKind::batch;
  std::vector<TrialReport> trials;
  Aggregate final_accuracy;
};

/// Runs `trials` trials with seeds seed, seed + 1, ...; writes trial_<k>.csv,
/// summary.csv and aggregate.csv under the output directory.
AggregateReport run_experiment(const ExperimentConfig& config);
/// Same, on an already loaded dataset.
AggregateReport run_experiment(const ExperimentConfig& config, const DatasetPair& data);

struct SweepRow {
  std::string value;
  AggregateReport report;
};

/// One experiment per value of `param` (epsilon, m, E or label_order); each
/// writes to <out>/<param>_<value>/ and the table goes to <out>/sweep_<param>.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& config, std::string_view param,
                            std::span<const std::string> values);

std::vector<std::string> split_list(std::string_view text);

}  // namespace lilac
