#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <string>

#include "lilac/harness.hpp"

namespace lilac {

namespace {

constexpr std::array<std::string_view, 34> kKeys = {
    "dataset",     "data_dir",      "train_file", "test_file",    "blobs_classes", "blobs_per_class",
    "blobs_dim",   "blobs_sep",     "data_seed",  "variant",      "hidden",        "epochs",
    "batch_size",  "lr",            "milestones", "gamma",        "weight_decay",  "momentum",
    "nesterov",    "b",             "m",          "E",            "interval_lr",   "label_order",
    "order_seed",  "epsilon",       "T",          "ls_alpha",     "probe_every",   "kmeans_iters",
    "trials",      "seed",          "out",        "jobs"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for key '" + std::string(key) + "'");
}

LabelOrder parse_order(std::string_view text) {
  if (text == "ascending" || text == "asc") return LabelOrder::ascending;
  if (text == "random" || text == "rnd") return LabelOrder::random;
  throw ConfigError("label_order must be 'ascending' or 'random', got '" + std::string(text) + "'");
}

}  // namespace

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

KeyValues parse_key_values(std::istream& in, std::string_view source) {
  KeyValues values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(source) + ":" + std::to_string(number) + ": expected 'key = value'");
    auto key = trim(std::string_view(text).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(source) + ":" + std::to_string(number) + ": empty key");
    values[std::move(key)] = trim(std::string_view(text).substr(eq + 1));
  }
  return values;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_key_values(in, path.string());
}

std::span<const std::string_view> config_keys() { return kKeys; }

void set_config_value(ExperimentConfig& c, std::string_view key, std::string_view value) {
  auto& t = c.train;
  auto as_int = [&](auto& target) { target = parse_number<std::remove_reference_t<decltype(target)>>(key, value); };
  auto as_real = [&](double& target) { target = parse_number<double>(key, value); };

  if (key == "dataset") c.data.kind = std::string(value);
  else if (key == "data_dir") c.data.dir = value;
  else if (key == "train_file") c.data.train_file = value;
  else if (key == "test_file") c.data.test_file = value;
  else if (key == "blobs_classes") as_int(c.data.blobs.classes);
  else if (key == "blobs_per_class") as_int(c.data.blobs.per_class);
  else if (key == "blobs_dim") as_int(c.data.blobs.dim);
  else if (key == "blobs_sep") as_real(c.data.blobs.separation);
  else if (key == "data_seed") as_int(c.data.blobs.seed);
  else if (key == "variant") c.variant = parse_variant(value);
  else if (key == "hidden") {
    t.hidden.clear();
    for (const auto& w : split_list(value)) t.hidden.push_back(parse_number<Index>(key, w));
  } else if (key == "epochs") as_int(t.epochs);
  else if (key == "batch_size") as_int(t.batch_size);
  else if (key == "lr") as_real(t.optim.base_lr);
  else if (key == "milestones") {
    t.optim.milestones.clear();
    for (const auto& m : split_list(value)) t.optim.milestones.push_back(parse_number<int>(key, m));
  } else if (key == "gamma") as_real(t.optim.gamma);
  else if (key == "weight_decay") as_real(t.optim.weight_decay);
  else if (key == "momentum") as_real(t.optim.momentum);
  else if (key == "nesterov") t.optim.nesterov = parse_bool(key, value);
  else if (key == "b") {
    as_int(t.schedule.initial);
    c.auto_initial = false;
  } else if (key == "m") as_int(t.schedule.step);
  else if (key == "E") as_int(t.schedule.interval_epochs);
  else if (key == "interval_lr") as_real(t.schedule.interval_lr);
  else if (key == "label_order") t.schedule.order = parse_order(value);
  else if (key == "order_seed") as_int(t.schedule.order_seed);
  else if (key == "epsilon") as_real(t.ac.epsilon);
  else if (key == "T") as_int(t.ac.threshold);
  else if (key == "ls_alpha") as_real(t.ls_alpha);
  else if (key == "probe_every") as_int(t.probe_every);
  else if (key == "kmeans_iters") as_int(t.kmeans_iters);
  else if (key == "trials") as_int(c.trials);
  else if (key == "seed") as_int(c.seed);
  else if (key == "out") c.out_dir = value;
  else if (key == "jobs") as_int(c.jobs);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig make_config(const KeyValues& values) {
  ExperimentConfig c;
  for (const auto& [key, value] : values) set_config_value(c, key, value);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (out_dir.empty()) throw ConfigError("out must not be empty");
  const auto& k = data.kind;
  if (k != "blobs" && k != "cifar10" && k != "cifar100" && k != "flat")
    throw ConfigError("dataset must be blobs, cifar10, cifar100 or flat, got '" + k + "'");
  if ((k == "cifar10" || k == "cifar100") && data.dir.empty()) throw ConfigError("dataset " + k + " needs data_dir");
  if (k == "flat" && (data.train_file.empty() || data.test_file.empty()))
    throw ConfigError("dataset flat needs train_file and test_file");
  if (k == "blobs") {
    if (data.blobs.dim < 1) throw ConfigError("blobs_dim must be >= 1");
    if (data.blobs.classes < 2) throw ConfigError("blobs_classes must be >= 2");
    if (data.blobs.per_class < 2) throw ConfigError("blobs_per_class must be >= 2");
    if (!(data.blobs.separation > 0)) throw ConfigError("blobs_sep must be > 0");
    resolve_train_config(*this, data.blobs.classes);
  } else {
    train.optim.validate();
  }
}

DatasetPair load_dataset(const DatasetSpec& spec) {
  if (spec.kind == "blobs") return make_blobs(spec.blobs);
  if (spec.kind == "cifar10") return load_cifar10(spec.dir);
  if (spec.kind == "cifar100") return load_cifar100(spec.dir);
  if (spec.kind == "flat") return {read_flat(spec.train_file, Split::train), read_flat(spec.test_file, Split::test)};
  throw ConfigError("unknown dataset '" + spec.kind + "'");
}

TrainConfig resolve_train_config(const ExperimentConfig& config, int num_labels) {
  TrainConfig t = config.train;
  if (config.auto_initial) t.schedule.initial = std::max(1, num_labels / 2);
  t.validate(config.variant, num_labels);
  return t;
}

}  // namespace lilac
