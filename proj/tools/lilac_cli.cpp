// lilac: run experiments and parameter sweeps from a key-value config.
//
//   lilac run --config <path> [--variant <kind>] [--seed <n>] [--trials <n>] [--out <dir>] [--<key> <value>...]
//   lilac sweep --config <path> --param <name> --values <csv-list> [--<key> <value>...]
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lilac/harness.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kNumericExit = 4;

// Leftover "--key value" / "--key=value" pairs become config overrides.
void apply_extras(lilac::KeyValues& values, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw lilac::ConfigError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw lilac::ConfigError("missing value for --" + key);
      value = extras[++i];
    }
    values[key] = value;
  }
}

void print_report(const lilac::AggregateReport& report, const std::filesystem::path& out) {
  std::printf("variant %s: %d trial(s), final test accuracy %.4f +- %.4f%s\n",
              std::string(lilac::to_string(report.variant)).c_str(), report.final_accuracy.count,
              report.final_accuracy.mean, report.final_accuracy.stddev,
              report.final_accuracy.single ? " (single trial, std fixed at 0)" : "");
  std::printf("metrics written to %s\n", out.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum training by incremental labels with adaptive compensation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string variant, out;
  long long seed = -1;
  int trials = 0;
  auto* run = app.add_subcommand("run", "Run one experiment (all trials)");
  run->add_option("--config", config_path, "Key-value config file")->required();
  run->add_option("--variant", variant, "Training variant");
  run->add_option("--seed", seed, "Base seed");
  run->add_option("--trials", trials, "Number of trials");
  run->add_option("--out", out, "Output directory");
  run->allow_extras();

  std::string param, values_csv;
  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter over a list of values");
  sweep->add_option("--config", config_path, "Key-value config file")->required();
  sweep->add_option("--param", param, "epsilon | m | E | label_order")->required();
  sweep->add_option("--values", values_csv, "Comma-separated values")->required();
  sweep->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    lilac::KeyValues values = lilac::read_key_values(config_path);
    if (*run) {
      apply_extras(values, run->remaining());
      if (!variant.empty()) values["variant"] = variant;
      if (seed >= 0) values["seed"] = std::to_string(seed);
      if (trials > 0) values["trials"] = std::to_string(trials);
      if (!out.empty()) values["out"] = out;
      const auto config = lilac::make_config(values);
      print_report(lilac::run_experiment(config), config.out_dir);
    } else {
      apply_extras(values, sweep->remaining());
      const auto config = lilac::make_config(values);
      const auto list = lilac::split_list(values_csv);
      for (const auto& row : lilac::sweep(config, param, list))
        std::printf("%s = %s: %.4f +- %.4f\n", param.c_str(), row.value.c_str(), row.report.final_accuracy.mean,
                    row.report.final_accuracy.stddev);
      std::printf("table written to %s\n", (config.out_dir / ("sweep_" + param + ".csv")).string().c_str());
    }
  } catch (const lilac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const lilac::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const lilac::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataExit;
  } catch (const lilac::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumericExit;
  }
  return 0;
}
