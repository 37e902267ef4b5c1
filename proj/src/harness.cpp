#include "lilac/harness.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace lilac {

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) throw ConfigError("aggregate: no reports");
  Aggregate a;
  a.count = static_cast<int>(values.size());
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.count;
  a.single = a.count == 1;
  if (a.count >= 2) {
    double ss = 0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (a.count - 1));
  }
  return a;
}

std::string format_number(double value) {
  char buf[64];
  const double magnitude = std::abs(value);
  const bool plain = magnitude == 0 || (magnitude >= 1e-5 && magnitude < 1e15);
  const auto res = plain ? std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed)
                         : std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& out, const TrialReport& report) {
  out << kMetricsHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.epoch << ',' << to_string(r.phase) << ',' << r.revealed << ',' << format_number(r.lr) << ','
        << format_number(r.train_loss) << ',' << format_number(r.train_acc) << ',' << format_number(r.test_acc) << ',';
    if (r.ac_modified) out << *r.ac_modified;
    out << ',';
    if (r.probe_acc) out << format_number(*r.probe_acc);
    out << ',';
    if (r.cluster_acc) out << format_number(*r.cluster_acc);
    out << '\n';
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failure on " + path.string());
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const TrialReport& report) {
  auto out = open_output(path);
  write_metrics_csv(out, report);
  finish_output(out, path);
}

AggregateReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, load_dataset(config.data));
}

AggregateReport run_experiment(const ExperimentConfig& config, const DatasetPair& data) {
  config.validate();
  data.train.validate();
  data.test.validate();
  const TrainConfig train = resolve_train_config(config, data.train.num_labels);
  ensure_directory(config.out_dir);

  AggregateReport result;
  result.variant = config.variant;
  result.trials.resize(static_cast<std::size_t>(config.trials));
  auto run_trial = [&](int k) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(k);
    Rng rng(seed);
    auto report = run_variant(config.variant, data, train, rng, seed);
    report.seed = seed;
    result.trials[static_cast<std::size_t>(k)] = std::move(report);
  };

  if (config.jobs <= 1 || config.trials == 1) {
    for (int k = 0; k < config.trials; ++k) run_trial(k);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    for (int w = 0; w < std::min(config.jobs, config.trials); ++w)
      workers.emplace_back([&] {
        for (int k = next++; k < config.trials; k = next++) {
          try {
            run_trial(k);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<double> finals;
  for (std::size_t k = 0; k < result.trials.size(); ++k) {
    write_metrics_csv(config.out_dir / ("trial_" + std::to_string(k) + ".csv"), result.trials[k]);
    finals.push_back(result.trials[k].final_test_acc());
  }
  result.final_accuracy = aggregate(finals);

  const auto summary_path = config.out_dir / "summary.csv";
  auto summary = open_output(summary_path);
  summary << "trial,seed,final_test_acc\n";
  for (std::size_t k = 0; k < result.trials.size(); ++k)
    summary << k << ',' << result.trials[k].seed << ',' << format_number(finals[k]) << '\n';
  finish_output(summary, summary_path);

  const auto aggregate_path = config.out_dir / "aggregate.csv";
  auto agg = open_output(aggregate_path);
  agg << "variant,trials,mean_test_acc,std_test_acc,note\n"
      << to_string(config.variant) << ',' << result.final_accuracy.count << ','
      << format_number(result.final_accuracy.mean) << ',' << format_number(result.final_accuracy.stddev) << ','
      << (result.final_accuracy.single ? "single_trial_std_zero" : "") << '\n';
  finish_output(agg, aggregate_path);
  return result;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, std::string_view param,
                            std::span<const std::string> values) {
  if (param != "epsilon" && param != "m" && param != "E" && param != "label_order")
    throw ConfigError("sweep parameter must be epsilon, m, E or label_order, got '" + std::string(param) + "'");
  if (values.empty()) throw ConfigError("sweep needs at least one value");

  std::vector<ExperimentConfig> configs;
  for (const auto& value : values) {
    ExperimentConfig c = config;
    set_config_value(c, param, value);
    c.out_dir = config.out_dir / (std::string(param) + "_" + value);
    c.validate();
    configs.push_back(std::move(c));
  }

  const DatasetPair data = load_dataset(config.data);
  for (const auto& c : configs) resolve_train_config(c, data.train.num_labels);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) rows.push_back({values[i], run_experiment(configs[i], data)});

  ensure_directory(config.out_dir);
  const auto path = config.out_dir / ("sweep_" + std::string(param) + ".csv");
  auto out = open_output(path);
  out << "param,value,variant,trials,mean_test_acc,std_test_acc\n";
  for (const auto& row : rows)
    out << param << ',' << row.value << ',' << to_string(row.report.variant) << ',' << row.report.final_accuracy.count
        << ',' << format_number(row.report.final_accuracy.mean) << ','
        << format_number(row.report.final_accuracy.stddev) << '\n';
  finish_output(out, path);
  return rows;
}

}  // namespace lilac
