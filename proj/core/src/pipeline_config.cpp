#include "hhlc/pipeline_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <sstream>

#include "hhlc/error.hpp"

namespace hhlc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end || text.empty()) throw DataError("config: bad value for " + key + ": '" + text + "'");
  return v;
}

std::string fmt(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  auto as_int = [&] { return parse_number<int>(key, value); };
  auto as_double = [&] { return parse_number<double>(key, value); };

  if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "sizes") {
    std::vector<int> parsed;
    for (const auto& part : split(value, ',')) {
      const int n = parse_number<int>(key, part);
      if (n != 2 && n != 4 && n != 8 && n != 16) throw DataError("config: sizes must be drawn from 2,4,8,16");
      parsed.push_back(n);
    }
    if (parsed.empty()) throw DataError("config: sizes is empty");
    sizes = parsed;
  } else if (key == "allocation") {
    if (value == "per_config") allocation = Allocation::per_config;
    else if (value == "per_size") allocation = Allocation::per_size;
    else throw DataError("config: allocation must be per_config or per_size");
  } else if (key == "count") {
    count = as_int();
    if (count < 1) throw DataError("config: count must be positive");
  } else if (key == "size_totals") {
    std::map<int, int> parsed;
    for (const auto& part : split(value, ',')) {
      const auto kv = split(part, ':');
      if (kv.size() != 2) throw DataError("config: size_totals entries look like n:total");
      const int total = parse_number<int>(key, kv[1]);
      if (total < 0) throw DataError("config: size_totals must be non-negative");
      parsed[parse_number<int>(key, kv[0])] = total;
    }
    size_totals = parsed;
  } else if (key == "kappa_max") {
    kappa_max = as_double();
    if (!(kappa_max >= 1.0)) throw DataError("config: kappa_max must be at least 1");
  } else if (key == "cutoff") {
    cutoff = DepthCutoff::parse(value);
  } else if (key == "variant") {
    variant = variant_from_string(value);
  } else if (key == "test_fraction" || key == "val_fraction") {
    const double f = as_double();
    if (!(f > 0.0 && f < 1.0)) throw DataError("config: " + key + " must lie in (0, 1)");
    (key == "test_fraction" ? test_fraction : val_fraction) = f;
  } else if (key == "lr0") {
    train.lr0 = as_double();
  } else if (key == "momentum") {
    train.momentum = as_double();
  } else if (key == "patience") {
    train.patience = as_int();
  } else if (key == "lr_decay_divisor") {
    train.lr_decay_divisor = as_double();
  } else if (key == "min_lr") {
    train.min_lr = as_double();
  } else if (key == "max_epochs") {
    train.max_epochs = as_int();
  } else if (key == "batch_size") {
    train.batch_size = as_int();
  } else if (key == "early_stop_tolerance") {
    train.early_stop_tolerance = as_double();
  } else if (key == "iris_count") {
    iris_count = as_int();
    if (iris_count < 1) throw DataError("config: iris_count must be positive");
  } else if (key == "folds") {
    folds = as_int();
    if (folds < 2) throw DataError("config: folds must be at least 2");
  } else if (key == "corpus_path") {
    corpus_path = value;
  } else if (key == "iris_path") {
    iris_path = value;
  } else {
    throw DataError("config: unknown key '" + key + "'");
  }
  if (key.starts_with("lr") || key == "momentum" || key == "patience" || key == "min_lr" || key == "max_epochs" ||
      key == "batch_size" || key == "early_stop_tolerance")
    train.validate();
}

void PipelineConfig::read(std::istream& is, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  std::string totals;
  for (const auto& [n, t] : size_totals) totals += (totals.empty() ? "" : ",") + std::to_string(n) + ":" + std::to_string(t);
  return {{"seed", std::to_string(seed)},
          {"sizes", join_ints(sizes)},
          {"allocation", allocation == Allocation::per_size ? "per_size" : "per_config"},
          {"count", std::to_string(count)},
          {"size_totals", totals},
          {"kappa_max", fmt(kappa_max)},
          {"cutoff", cutoff.to_string()},
          {"variant", std::string(to_string(variant))},
          {"test_fraction", fmt(test_fraction)},
          {"val_fraction", fmt(val_fraction)},
          {"lr0", fmt(train.lr0)},
          {"momentum", fmt(train.momentum)},
          {"patience", std::to_string(train.patience)},
          {"lr_decay_divisor", fmt(train.lr_decay_divisor)},
          {"min_lr", fmt(train.min_lr)},
          {"max_epochs", std::to_string(train.max_epochs)},
          {"batch_size", std::to_string(train.batch_size)},
          {"early_stop_tolerance", fmt(train.early_stop_tolerance)},
          {"iris_count", std::to_string(iris_count)},
          {"folds", std::to_string(folds)},
          {"corpus_path", corpus_path},
          {"iris_path", iris_path}};
}

CorpusConfig PipelineConfig::corpus() const {
  CorpusConfig c;
  c.sizes = sizes;
  c.allocation = allocation;
  c.count = count;
  c.size_totals = size_totals;
  c.kappa_max = kappa_max;
  c.seed = seed;
  return c;
}

int PipelineConfig::total_matrices() const {
  int total = 0;
  for (const auto& [key, c] : allocation_counts(corpus())) total += c;
  return total;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  PipelineConfig cfg;
  cfg.read(in, path);
  return cfg;
}

PipelineConfig resolve_config(const std::optional<std::string>& explicit_path) {
  if (explicit_path) return load_config(*explicit_path);
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return load_config(env);
  return {};
}

}  // namespace hhlc
