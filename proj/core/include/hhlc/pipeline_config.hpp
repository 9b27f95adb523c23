#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hhlc/dataset_forge.hpp"
#include "hhlc/features.hpp"
#include "hhlc/mlp_classifier.hpp"

namespace hhlc {

// Names the default config file when no --config is given.
inline constexpr const char* kConfigEnvVar = "HHLC_CONFIG";

// Pipeline settings read from plain `key = value` lines. '#' starts a
// comment. Unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 7;

  // corpus
  std::vector<int> sizes = {2, 4, 8, 16};
  Allocation allocation = Allocation::per_size;
  int count = 100;                           // per (n, s) under per_config
  std::map<int, int> size_totals = {{2, 600}, {4, 1600}, {8, 2000}, {16, 7800}};
  double kappa_max = 1000.0;

  DepthCutoff cutoff;
  Variant variant = Variant::d1;
  double test_fraction = 0.2;
  double val_fraction = 0.2;  // carved from the training part
  TrainConfig train;

  int iris_count = 500;
  int folds = 5;

  std::string corpus_path;
  std::string iris_path;

  // Sets one key; throws DataError on an unknown key or a bad value.
  void set(const std::string& key, const std::string& value);
  void read(std::istream& is, const std::string& source = "config");
  std::map<std::string, std::string> to_map() const;

  CorpusConfig corpus() const;
  int total_matrices() const;
};

PipelineConfig load_config(const std::string& path);

// Reads `explicit_path` if given, else the file named by HHLC_CONFIG if set,
// else returns defaults.
PipelineConfig resolve_config(const std::optional<std::string>& explicit_path);

}  // namespace hhlc
