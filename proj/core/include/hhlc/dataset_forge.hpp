#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hhlc/matrix_core.hpp"

namespace hhlc {

enum class Allocation {
  per_config,  // `count` matrices for every (n, s)
  per_size,    // `size_totals[n]` matrices for size n, spread evenly over s
};

struct CorpusConfig {
  std::vector<int> sizes = {2, 4, 8, 16};
  Allocation allocation = Allocation::per_config;
  int count = 10;
  std::map<int, int> size_totals;
  double kappa_max = 1000.0;
  std::uint64_t seed = 0;
};

struct CorpusEntry {
  SystemMatrix matrix;
  int s = 0;
  std::optional<double> kappa;
  std::optional<int> n_l;
  std::optional<int> depth;
  bool overflow = false;  // clock register too large to build
  std::optional<int> label;
};

using Corpus = std::vector<CorpusEntry>;

// Number of matrices per (n, s) under the config.
std::map<std::pair<int, int>, int> allocation_counts(const CorpusConfig& cfg);

// Generates every matrix of the config, sorted by id. Ids are
// "r-nNN-sNN-IIIII"; each matrix has its own seed derived from
// (seed, n, s, index), so output does not depend on `jobs`.
Corpus build_corpus(const CorpusConfig& cfg, int jobs = 0);

// Fills kappa, n_l and depth (HHL on the dilation for non-symmetric input).
void attach_depths(Corpus& corpus, int jobs = 0);

struct DepthCutoff {
  enum class Mode { absolute, quantile };
  Mode mode = Mode::quantile;
  double value = 0.476;

  // "absolute:1000000" or "quantile:0.476".
  static DepthCutoff parse(const std::string& text);
  std::string to_string() const;
};

struct LabelSummary {
  double threshold = 0.0;  // label = depth < threshold; +inf when every finite depth is positive
  double positive_fraction = 0.0;
  std::size_t positives = 0;
  std::size_t total = 0;
};

// Pure labeling rule. Missing depths (overflow) are always negative. In
// quantile mode the threshold is the candidate (distinct depth or +inf) whose
// positive fraction is closest to the target, lower threshold on ties.
LabelSummary label_depths(const std::vector<std::optional<int>>& depths, const DepthCutoff& cutoff,
                          std::vector<int>& labels);
LabelSummary label_corpus(Corpus& corpus, const DepthCutoff& cutoff);
nlohmann::json to_json(const LabelSummary& s);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified by label; both parts sorted. Throws DataError if a class is
// absent.
Split stratified_split(const std::vector<int>& labels, double test_fraction, std::uint64_t seed);

// Parses `sepal_length,sepal_width,petal_length,petal_width[,species]`;
// returns a rows x 4 matrix.
Eigen::MatrixXd read_iris_csv(std::istream& is);

// `count` normalized 4x4 matrices built from 4 distinct random rows each,
// keeping only invertible draws (|det| > 1e-10 times the product of row
// norms). Ids are "iris-IIIII".
std::vector<SystemMatrix> iris_matrices(const Eigen::MatrixXd& iris, int count, std::uint64_t seed);

inline constexpr int kKappaBins = 5;
inline constexpr double kKappaLow = 1.0;
inline constexpr double kKappaHigh = 1000.0;

struct KappaHistogram {
  std::array<std::size_t, kKappaBins> counts{};
  std::array<double, kKappaBins> proportions{};
  std::size_t total = 0;
  std::size_t clipped = 0;  // kappa > 1000 counted in the top bin

  static double bin_low(int b);
  static double bin_high(int b);
};

int kappa_bin(double kappa);
KappaHistogram kappa_histogram(const std::vector<double>& kappas);
double tv_distance(const KappaHistogram& a, const KappaHistogram& b);

// Per-bin draw counts: largest-remainder rounding of total * proportion.
std::array<std::size_t, kKappaBins> bin_quota(const KappaHistogram& target, std::size_t total);

// Largest total for which every bin quota fits in the pool.
std::size_t max_matched_total(const std::vector<double>& pool_kappas, const KappaHistogram& target);

// Indices into pool_kappas forming the selected set, sorted. Throws DataError
// listing per-bin shortfalls when the pool cannot meet a quota.
std::vector<std::size_t> distribution_match(const std::vector<double>& pool_kappas, const KappaHistogram& target,
                                            std::size_t total, std::uint64_t seed);

void write_histogram_csv(std::ostream& os, const KappaHistogram& h, const std::string& set_name, bool header);

// Corpus JSONL: matrix interchange object plus s, kappa, n_l, depth, label.
void write_corpus(std::ostream& os, const Corpus& corpus);
Corpus read_corpus(std::istream& is);

}  // namespace hhlc
